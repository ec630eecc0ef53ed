#include "absa/stage.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "absa/embedding_transfer.hpp"
#include "absa/errors.hpp"
#include "absa/hash.hpp"
#include "absa/tokenize.hpp"

namespace absa {

using nlohmann::json;

StageKind stage_kind_from_string(const std::string& s) {
    if (s == "lm_pretrain") return StageKind::lm_pretrain;
    if (s == "lm_finetune") return StageKind::lm_finetune;
    if (s == "aux_classify") return StageKind::aux_classify;
    if (s == "target_classify") return StageKind::target_classify;
    if (s == "target_regress") return StageKind::target_regress;
    throw ConfigError("unknown stage kind '" + s + "'");
}

std::string to_string(StageKind k) {
    switch (k) {
        case StageKind::lm_pretrain: return "lm_pretrain";
        case StageKind::lm_finetune: return "lm_finetune";
        case StageKind::aux_classify: return "aux_classify";
        case StageKind::target_classify: return "target_classify";
        case StageKind::target_regress: return "target_regress";
    }
    return "?";
}

TargetField target_field_from_string(const std::string& s) {
    if (s == "aspect_l1") return TargetField::aspect_l1;
    if (s == "aspect_l2") return TargetField::aspect_l2;
    if (s == "sentiment") return TargetField::sentiment;
    throw ConfigError("unknown target field '" + s + "'");
}

std::string to_string(TargetField f) {
    switch (f) {
        case TargetField::aspect_l1: return "aspect_l1";
        case TargetField::aspect_l2: return "aspect_l2";
        case TargetField::sentiment: return "sentiment";
    }
    return "?";
}

json StageMetrics::to_json() const {
    json j;
    j["final_val_loss"] = final_val_loss;
    j["steps"] = steps;
    j["n_train"] = n_train;
    j["n_val"] = n_val;
    if (val_perplexity > 0.0) j["val_perplexity"] = val_perplexity;
    if (task_metrics) j["task"] = task_metrics->to_json();
    json eps = json::array();
    for (const auto& e : epochs)
        eps.push_back({{"phase", e.phase},
                       {"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_loss", e.val_loss}});
    j["epochs"] = eps;
    return j;
}

FiqaSplit stratified_split(const std::vector<LabeledExample>& examples, double train_frac,
                           double val_frac, std::uint64_t seed) {
    if (!(train_frac > 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0))
        throw ConfigError("stratified_split: bad fractions");
    std::map<std::string, std::vector<std::size_t>> by_l1;
    for (std::size_t i = 0; i < examples.size(); ++i) by_l1[examples[i].aspect_l1].push_back(i);

    FiqaSplit split;
    for (auto& [label, indices] : by_l1) {
        Rng rng = Rng(seed).fork(label);
        rng.shuffle(indices);
        std::size_t n = indices.size();
        std::size_t n_train = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n))));
        std::size_t n_val = static_cast<std::size_t>(
            std::floor(val_frac * static_cast<double>(n)));
        n_train = std::min(n_train, n);
        n_val = std::min(n_val, n - n_train);
        for (std::size_t i = 0; i < n; ++i) {
            const LabeledExample& ex = examples[indices[i]];
            if (i < n_train)
                split.train.push_back(ex);
            else if (i < n_train + n_val)
                split.val.push_back(ex);
            else
                split.test.push_back(ex);
        }
    }
    return split;
}

namespace {

// ----------------------------------------------------------------- helpers

UnfreezePlan make_unfreeze_plan(const StagePlan& plan, const std::vector<std::string>& names) {
    switch (plan.strategy) {
        case UnfreezeStrategy::gradual: return gradual_unfreeze_plan(names, plan.epochs);
        case UnfreezeStrategy::chain_thaw_full: return chain_thaw_full_plan(names);
        case UnfreezeStrategy::chain_thaw_partial: {
            std::size_t k = plan.chain_thaw_k;
            if (k == 0) return chain_thaw_full_plan(names);
            return chain_thaw_partial_plan(names, k);
        }
        case UnfreezeStrategy::all_at_once: return all_at_once_plan(names, plan.epochs);
    }
    throw ConfigError("unreachable strategy");
}

void apply_phase(std::vector<ParameterGroup>& groups, const UnfreezePhase& phase) {
    for (auto& g : groups)
        g.trainable = std::find(phase.trainable.begin(), phase.trainable.end(), g.name) !=
                      phase.trainable.end();
}

std::vector<double> effective_lrs(const StagePlan& plan, std::size_t t, std::size_t total,
                                  std::size_t n_groups) {
    // the floor in the schedule's cut can push the tail below its nominal
    // endpoint lr_max/ratio (even negative for short schedules); training
    // never goes below the endpoint
    double lr = std::max(stlr(std::min(t, total), total, plan.schedule),
                         plan.schedule.lr_max / plan.schedule.ratio);
    return discriminative_lrs(lr, n_groups, plan.disc_decay);
}

Tensor transfer_bias_row(const Vocabulary& src, const Tensor& row, const Vocabulary& dst) {
    Tensor col(Shape{src.size(), 1});
    for (std::size_t i = 0; i < src.size(); ++i) col.at(i, 0) = row.at(i);
    Tensor out_col = transfer_embeddings(src, col, dst);
    Tensor out(Shape{1, dst.size()});
    for (std::size_t i = 0; i < dst.size(); ++i) out.at(0, i) = out_col.at(i, 0);
    return out;
}

std::vector<std::vector<std::string>> tokenized_documents(const std::vector<CorpusDocument>& docs) {
    std::vector<std::vector<std::string>> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(tokenize(d.text));
    return out;
}

// deterministic document-level split
void split_documents(std::vector<std::size_t>& order, double val_fraction, Rng& rng,
                     std::vector<std::size_t>& train, std::vector<std::size_t>& val) {
    rng.shuffle(order);
    std::size_t n = order.size();
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(val_fraction * static_cast<double>(n)));
    if (val_fraction > 0.0 && n_val == 0 && n > 1) n_val = 1;
    for (std::size_t i = 0; i < n; ++i)
        (i < n - n_val ? train : val).push_back(order[i]);
}

struct PreparedCls {
    std::vector<ClsItem> train, val;
    LabelSet labels{std::vector<std::string>{"_"}};
};

double evaluate_cls_loss(const Model& model, const std::vector<ClsBatch>& batches) {
    if (batches.empty()) throw ValidationError("validation set produced no batches");
    DropoutMasks none;
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& b : batches) {
        ad::Var loss = model.task_loss(b, none);
        total += loss.value().item() * static_cast<double>(b.lengths.size());
        n += b.lengths.size();
    }
    return total / static_cast<double>(n);
}

double evaluate_lm_ce(const Model& model, const std::vector<int>& ids, std::size_t bptt) {
    return std::log(model.perplexity(ids, 1, bptt));
}

// ----------------------------------------------------------------- LM stages

StageResult run_lm_stage(const StagePlan& plan, const StageData& data, const Checkpoint* input) {
    if (plan.kind == StageKind::lm_pretrain && input)
        throw ConfigError("lm_pretrain starts from scratch; pass the checkpoint to lm_finetune");
    if (plan.kind == StageKind::lm_finetune && !input)
        throw ConfigError("lm_finetune requires an input checkpoint");
    if (data.documents.empty()) throw ValidationError("no documents in corpus");

    Rng root(plan.seed);
    auto tokenized = tokenized_documents(data.documents);

    std::vector<std::size_t> order(tokenized.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::size_t> train_idx, val_idx;
    Rng split_rng = root.fork("doc_split");
    split_documents(order, plan.val_fraction, split_rng, train_idx, val_idx);

    std::vector<std::vector<std::string>> train_docs, val_docs;
    for (std::size_t i : train_idx) train_docs.push_back(tokenized[i]);
    for (std::size_t i : val_idx) val_docs.push_back(tokenized[i]);
    if (train_docs.empty()) throw ValidationError("corpus split produced no training documents");

    Vocabulary vocab = Vocabulary::build(train_docs, plan.vocab_max_size, plan.vocab_min_freq);

    Model model = [&]() -> Model {
        if (!input) {
            EncoderConfig cfg = plan.encoder;
            cfg.vocab_size = vocab.size();
            return Model(cfg, HeadSpec::lm(), root.fork("init").next_u64());
        }
        // continue from the checkpoint, re-basing vocabulary-sized tensors
        HeadSpec in_head = head_spec_from_checkpoint(*input);
        if (in_head.kind != HeadKind::lm_decoder)
            throw ConfigError("lm_finetune expects an lm_decoder checkpoint, got " +
                              to_string(in_head.kind));
        Vocabulary src_vocab = vocab_from_checkpoint(*input);
        Model old = model_from_checkpoint(*input);
        EncoderConfig cfg = encoder_config_from_checkpoint(*input);
        cfg.vocab_size = vocab.size();
        Model fresh(cfg, in_head, root.fork("init").next_u64());

        auto old_named = old.named_parameters();
        std::vector<ad::Var> params;
        std::size_t i = 0;
        for (const auto& [name, var] : fresh.named_parameters()) {
            const Tensor& old_t = old_named[i].second.value();
            if (name == "encoder.embedding" || (!cfg.tie_decoder && name == "head.0")) {
                params.push_back(
                    ad::leaf(transfer_embeddings(src_vocab, old_t, vocab), true));
            } else if ((cfg.tie_decoder && name == "head.0") ||
                       (!cfg.tie_decoder && name == "head.1")) {
                params.push_back(ad::leaf(transfer_bias_row(src_vocab, old_t, vocab), true));
            } else {
                params.push_back(ad::leaf(old_t, true));
            }
            ++i;
        }
        fresh.set_parameters(params);
        return fresh;
    }();
    const EncoderConfig& cfg = model.encoder().config();

    std::vector<int> train_ids = lm_id_stream(train_docs, vocab);
    std::vector<int> val_ids =
        plan.val_on_train || val_docs.empty() ? train_ids : lm_id_stream(val_docs, vocab);

    UnfreezePlan unfreeze = make_unfreeze_plan(plan, model.group_names());
    Rng mask_rng = root.fork("masks");
    Optimizer optimizer(plan.optimizer);

    StageMetrics metrics;
    metrics.n_train = train_ids.size();
    metrics.n_val = val_ids.size();
    double val_loss = 0.0;

    for (std::size_t pi = 0; pi < unfreeze.phases.size(); ++pi) {
        const UnfreezePhase& phase = unfreeze.phases[pi];
        std::vector<ParameterGroup> groups = model.groups();
        apply_phase(groups, phase);

        LmBatchStream stream(train_ids, plan.batch_size, plan.bptt_len);
        std::size_t windows = stream.num_windows();
        if (windows == 0)
            throw ValidationError("training stream too short for one BPTT window");
        std::size_t phase_epochs = phase.until_convergence ? plan.max_epochs_per_phase
                                                           : phase.epochs;
        std::size_t total_steps = std::max<std::size_t>(1, phase_epochs * windows);
        ConvergenceCheck convergence(plan.patience, plan.min_delta);
        std::size_t t = 0;

        for (std::size_t epoch = 0; epoch < phase_epochs; ++epoch) {
            LstmState state = LstmState::zeros(cfg, plan.batch_size);
            double train_loss_sum = 0.0;
            for (std::size_t k = 0; k < windows; ++k) {
                auto [win_in, win_tgt] = stream.window(k);
                DropoutMasks masks = DropoutMasks::sample(cfg, plan.batch_size, mask_rng);
                zero_grads(groups);
                ad::Var loss = model.lm_window_loss(win_in, win_tgt, state, masks);
                ad::backward(loss);
                clip_grad_norm(groups, plan.clip_norm);
                optimizer.step(groups, effective_lrs(plan, t, total_steps, groups.size()));
                train_loss_sum += loss.value().item();
                ++t;
                ++metrics.steps;
            }
            val_loss = evaluate_lm_ce(model, val_ids, plan.bptt_len);
            metrics.epochs.push_back(
                {pi, epoch, train_loss_sum / static_cast<double>(windows), val_loss});
            if (phase.until_convergence && convergence.update(val_loss)) break;
        }
    }

    metrics.final_val_loss = val_loss;
    metrics.val_perplexity = std::exp(val_loss);

    std::vector<StageProvenance> provenance = input ? input->provenance
                                                    : std::vector<StageProvenance>{};
    provenance.push_back({plan.stage_name.empty() ? to_string(plan.kind) : plan.stage_name,
                          data.data_hash, plan.config_hash, plan.seed});
    StageResult result{make_checkpoint(model, vocab, std::move(provenance), metrics.to_json()),
                       metrics};
    return result;
}

// ------------------------------------------------------- classification stages

PreparedCls prepare_cls_data(const StagePlan& plan, const StageData& data,
                             const Vocabulary& vocab, Rng& root) {
    PreparedCls out;
    if (plan.kind == StageKind::aux_classify) {
        out.labels = LabelSet({"long", "short"});
        std::vector<ClsItem> items;
        for (const auto& doc : data.documents) {
            if (!doc.position) continue;  // LM-only documents
            ClsItem item;
            std::vector<std::string> toks = tokenize(doc.text);
            if (toks.size() > plan.max_tokens) toks.resize(plan.max_tokens);
            if (toks.empty()) continue;
            item.ids = vocab.numericalize(toks);
            item.label = doc.position == Position::long_side ? 0 : 1;
            items.push_back(std::move(item));
        }
        if (items.empty())
            throw ValidationError("aux_classify: no position-labeled documents");
        std::vector<std::size_t> order(items.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::vector<std::size_t> train_idx, val_idx;
        Rng split_rng = root.fork("aux_split");
        split_documents(order, plan.val_fraction, split_rng, train_idx, val_idx);
        for (std::size_t i : train_idx) out.train.push_back(items[i]);
        for (std::size_t i : val_idx) out.val.push_back(items[i]);
        if (out.val.empty()) out.val = out.train;  // degenerate corpora validate on train
        return out;
    }

    if (!data.hierarchy) throw ConfigError("target stages need an aspect hierarchy");
    const AspectHierarchy& h = *data.hierarchy;
    out.labels = plan.target_field == TargetField::aspect_l1 ? h.l1_label_set()
                                                             : h.l2_label_set();
    FiqaSplit split;
    if (data.val_examples.empty()) {
        split = stratified_split(data.examples, 0.8, 0.1, plan.split_seed);
    } else {
        split.train = data.examples;
        split.val = data.val_examples;
    }
    auto to_items = [&](const std::vector<LabeledExample>& exs) {
        std::vector<ClsItem> items;
        for (const auto& ex : exs) {
            ClsItem item;
            std::vector<std::string> toks = example_tokens(ex, plan.input_mode);
            if (toks.size() > plan.max_tokens) toks.resize(plan.max_tokens);
            item.ids = vocab.numericalize(toks);
            if (plan.is_regression()) {
                item.value = ex.sentiment;
            } else {
                item.label = out.labels.index_of(plan.target_field == TargetField::aspect_l1
                                                     ? ex.aspect_l1
                                                     : ex.aspect_l2);
            }
            items.push_back(std::move(item));
        }
        return items;
    };
    out.train = to_items(split.train);
    out.val = to_items(plan.val_on_train ? split.train : split.val);
    if (out.val.empty()) out.val = out.train;
    if (out.train.empty()) throw ValidationError("no training examples after split");
    return out;
}

StageResult run_cls_stage(const StagePlan& plan, const StageData& data, const Checkpoint* input) {
    Rng root(plan.seed);

    // vocabulary: inherited from the checkpoint, or built from training text
    Vocabulary vocab = [&]() -> Vocabulary {
        if (input) return vocab_from_checkpoint(*input);
        std::vector<std::vector<std::string>> streams;
        if (plan.kind == StageKind::aux_classify) {
            for (const auto& doc : data.documents) streams.push_back(tokenize(doc.text));
        } else if (!data.val_examples.empty()) {
            for (const auto& ex : data.examples)
                streams.push_back(example_tokens(ex, plan.input_mode));
        } else {
            FiqaSplit split = stratified_split(data.examples, 0.8, 0.1, plan.split_seed);
            for (const auto& ex : split.train)
                streams.push_back(example_tokens(ex, plan.input_mode));
        }
        return Vocabulary::build(streams, plan.vocab_max_size, plan.vocab_min_freq);
    }();

    PreparedCls prepared = prepare_cls_data(plan, data, vocab, root);

    HeadSpec head = plan.is_regression()
                        ? HeadSpec::regressor(plan.head_hidden)
                        : HeadSpec::classifier(static_cast<int>(prepared.labels.size()),
                                               plan.head_hidden);

    Model model = [&]() -> Model {
        std::uint64_t head_seed = root.fork("head").next_u64();
        if (!input) {
            EncoderConfig cfg = plan.encoder;
            cfg.vocab_size = vocab.size();
            Model m(cfg, head, root.fork("init").next_u64());
            m.swap_head(head, head_seed);
            return m;
        }
        Model m = model_from_checkpoint(*input);
        HeadSpec old_head = m.head();
        std::vector<ad::Var> old_params;
        if (plan.transfer_head_hidden && old_head.kind != HeadKind::lm_decoder &&
            old_head.hidden == head.hidden) {
            auto named = m.named_parameters();
            for (auto& [name, var] : named)
                if (name == "head.0" || name == "head.1") old_params.push_back(var);
        }
        m.swap_head(head, head_seed);
        if (old_params.size() == 2) {
            // carry the inner linear block across the coarse->fine transfer
            auto params = m.parameters();
            std::size_t base = params.size() - 4;
            if (params[base].shape() == old_params[0].shape() &&
                params[base + 1].shape() == old_params[1].shape()) {
                params[base] = ad::leaf(old_params[0].value(), true);
                params[base + 1] = ad::leaf(old_params[1].value(), true);
                m.set_parameters(params);
            }
        }
        return m;
    }();
    const EncoderConfig& cfg = model.encoder().config();

    Rng val_rng = root.fork("val_batches");
    std::vector<ClsBatch> val_batches =
        classification_batches(prepared.val, plan.batch_size, val_rng);

    UnfreezePlan unfreeze = make_unfreeze_plan(plan, model.group_names());
    Rng mask_rng = root.fork("masks");
    Rng batch_rng = root.fork("batches");
    Optimizer optimizer(plan.optimizer);

    StageMetrics metrics;
    metrics.n_train = prepared.train.size();
    metrics.n_val = prepared.val.size();
    double val_loss = 0.0;

    for (std::size_t pi = 0; pi < unfreeze.phases.size(); ++pi) {
        const UnfreezePhase& phase = unfreeze.phases[pi];
        std::vector<ParameterGroup> groups = model.groups();
        apply_phase(groups, phase);

        std::size_t n_batches =
            (prepared.train.size() + plan.batch_size - 1) / plan.batch_size;
        std::size_t phase_epochs = phase.until_convergence ? plan.max_epochs_per_phase
                                                           : phase.epochs;
        std::size_t total_steps = std::max<std::size_t>(1, phase_epochs * n_batches);
        ConvergenceCheck convergence(plan.patience, plan.min_delta);
        std::size_t t = 0;

        for (std::size_t epoch = 0; epoch < phase_epochs; ++epoch) {
            std::vector<ClsBatch> batches =
                classification_batches(prepared.train, plan.batch_size, batch_rng);
            double train_loss_sum = 0.0;
            for (const ClsBatch& batch : batches) {
                DropoutMasks masks = DropoutMasks::sample(cfg, batch.lengths.size(), mask_rng);
                zero_grads(groups);
                ad::Var loss = model.task_loss(batch, masks);
                ad::backward(loss);
                clip_grad_norm(groups, plan.clip_norm);
                optimizer.step(groups, effective_lrs(plan, t, total_steps, groups.size()));
                train_loss_sum += loss.value().item();
                ++t;
                ++metrics.steps;
            }
            val_loss = evaluate_cls_loss(model, val_batches);
            metrics.epochs.push_back(
                {pi, epoch, train_loss_sum / static_cast<double>(batches.size()), val_loss});
            if (phase.until_convergence && convergence.update(val_loss)) break;
        }
    }

    metrics.final_val_loss = val_loss;

    // task metrics on the validation split
    if (plan.is_regression()) {
        std::vector<double> preds, truths;
        for (const auto& b : val_batches) {
            DropoutMasks none;
            ad::Var out = model.task_output(b, none);
            for (std::size_t i = 0; i < b.values.size(); ++i) {
                preds.push_back(out.value().at(i, 0));
                truths.push_back(b.values[i]);
            }
        }
        metrics.task_metrics = compute_regression_metrics(preds, truths);
    } else {
        std::vector<int> preds, truths;
        for (const auto& b : val_batches) {
            DropoutMasks none;
            ad::Var out = model.task_output(b, none);
            for (std::size_t i = 0; i < b.labels.size(); ++i) {
                std::size_t argmax = 0;
                for (std::size_t j = 1; j < out.value().cols(); ++j)
                    if (out.value().at(i, j) > out.value().at(i, argmax)) argmax = j;
                preds.push_back(static_cast<int>(argmax));
                truths.push_back(b.labels[i]);
            }
        }
        metrics.task_metrics =
            compute_classification_metrics(preds, truths, prepared.labels.size());
    }

    std::vector<StageProvenance> provenance = input ? input->provenance
                                                    : std::vector<StageProvenance>{};
    provenance.push_back({plan.stage_name.empty() ? to_string(plan.kind) : plan.stage_name,
                          data.data_hash, plan.config_hash, plan.seed});
    StageResult result{make_checkpoint(model, vocab, std::move(provenance), metrics.to_json()),
                       metrics};
    return result;
}

}  // namespace

StageResult run_stage_on(const StagePlan& plan, const StageData& data, const Checkpoint* input) {
    if (plan.is_lm_stage()) return run_lm_stage(plan, data, input);
    return run_cls_stage(plan, data, input);
}

StageResult run_stage(const StagePlan& plan, const Checkpoint* input) {
    StageData data;
    data.data_hash = hex64(hash_file(plan.dataset_path));
    if (plan.is_lm_stage() || plan.kind == StageKind::aux_classify) {
        data.documents = load_corpus(plan.dataset_path, plan.strict_loading);
    } else {
        if (plan.hierarchy_path.empty())
            throw ConfigError("target stages need --hierarchy (aspect hierarchy JSON)");
        data.hierarchy = AspectHierarchy::load(plan.hierarchy_path);
        data.examples = load_fiqa(plan.dataset_path, *data.hierarchy, plan.strict_loading).examples;
    }
    return run_stage_on(plan, data, input);
}

}  // namespace absa
