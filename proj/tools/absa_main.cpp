// absa: staged LSTM transfer-learning pipeline for aspect classification and
// sentiment regression. Subcommands cover every pipeline stage, evaluation,
// the subsample learning-curve harness, and diagnostics.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 data validation
// error, 4 numerical failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "absa/checkpoint.hpp"
#include "absa/config.hpp"
#include "absa/curve.hpp"
#include "absa/diag.hpp"
#include "absa/errors.hpp"
#include "absa/hash.hpp"
#include "absa/tokenize.hpp"
#include "absa/stage.hpp"

namespace fs = std::filesystem;
using namespace absa;
using nlohmann::json;

namespace {

constexpr const char* kArtifactVersion = "0.1.0";

struct CommonOpts {
    std::string config_path;
    std::string data_path;
    std::string hierarchy_path;
    std::string out_dir;
    std::string from_checkpoint;
    std::vector<std::string> sets;
    std::int64_t seed = -1;

    void attach(CLI::App* cmd, bool with_from) {
        cmd->add_option("--config", config_path, "TOML or JSON config file");
        cmd->add_option("--data", data_path, "dataset path (overrides data.path)");
        cmd->add_option("--hierarchy", hierarchy_path,
                        "aspect hierarchy JSON (overrides data.hierarchy)");
        cmd->add_option("--out", out_dir, "output directory (overrides run.out_dir)");
        cmd->add_option("--seed", seed, "run seed (overrides run.seed)");
        cmd->add_option("--set", sets, "explicit override, key.path=value")->take_all();
        if (with_from)
            cmd->add_option("--from", from_checkpoint, "input checkpoint to continue from");
    }

    json resolve() const {
        json file = json();
        if (!config_path.empty()) file = load_config_file(config_path);
        std::vector<std::pair<std::string, std::string>> flags;
        for (const auto& s : sets) {
            std::size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key.path=value, got '" + s + "'");
            flags.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        if (!data_path.empty()) flags.emplace_back("data.path", "\"" + data_path + "\"");
        if (!hierarchy_path.empty())
            flags.emplace_back("data.hierarchy", "\"" + hierarchy_path + "\"");
        if (!out_dir.empty()) flags.emplace_back("run.out_dir", "\"" + out_dir + "\"");
        if (seed >= 0) flags.emplace_back("run.seed", std::to_string(seed));
        return resolve_config(file, env_overrides(), flags);
    }
};

void write_json_file(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

int run_train_command(const CommonOpts& opts, StageKind kind, const std::string& command) {
    json config = opts.resolve();
    StagePlan plan = plan_from_config(config, kind);
    if (kind == StageKind::target_regress) plan.target_field = TargetField::sentiment;
    if (plan.dataset_path.empty()) throw ConfigError("no dataset: set data.path or --data");

    std::optional<Checkpoint> input;
    if (!opts.from_checkpoint.empty()) input = load_checkpoint(opts.from_checkpoint);
    else if (kind == StageKind::lm_finetune || kind == StageKind::aux_classify)
        throw ConfigError(command + " requires --from <checkpoint>");

    fs::path out_dir(config.at("run").at("out_dir").get<std::string>());
    fs::create_directories(out_dir);

    json manifest;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["command"] = command;
    manifest["config"] = config;
    manifest["config_hash"] = plan.config_hash;
    manifest["seed"] = plan.seed;
    manifest["inputs"] = {{"data", plan.dataset_path},
                          {"data_hash", hex64(hash_file(plan.dataset_path))},
                          {"checkpoint", opts.from_checkpoint}};
    manifest["outputs"] = {{"checkpoint", (out_dir / "checkpoint.bin").string()},
                           {"metrics", (out_dir / "metrics.json").string()},
                           {"manifest", (out_dir / "manifest.json").string()}};
    manifest["status"] = "running";
    write_json_file(manifest, out_dir / "manifest.json");

    auto t0 = std::chrono::steady_clock::now();
    StageResult result = run_stage(plan, input ? &*input : nullptr);
    auto t1 = std::chrono::steady_clock::now();

    save_checkpoint(result.checkpoint, (out_dir / "checkpoint.bin").string());
    json metrics = result.metrics.to_json();
    metrics["config_hash"] = plan.config_hash;
    metrics["artifact_version"] = kArtifactVersion;
    write_json_file(metrics, out_dir / "metrics.json");

    manifest["status"] = "complete";
    manifest["wall_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    manifest["steps"] = result.metrics.steps;
    write_json_file(manifest, out_dir / "manifest.json");

    std::cout << metrics.dump() << "\n";
    return 0;
}

struct EvalOpts {
    std::string checkpoint_path, data_path, hierarchy_path, task, split = "all";
    std::string data_kind = "fiqa";
    std::string target = "aspect_l2";
    std::string input_mode = "sentence_target";
    std::uint64_t split_seed = 42;
    std::size_t max_tokens = 400;
};

int run_evaluate(const EvalOpts& opts) {
    TaskKind task = task_kind_from_string(opts.task);
    Checkpoint cp = load_checkpoint(opts.checkpoint_path);
    Model model = model_from_checkpoint(cp);
    Vocabulary vocab = vocab_from_checkpoint(cp);

    if (task == TaskKind::classify && model.head().kind != HeadKind::classifier)
        throw ConfigError("checkpoint carries a " + to_string(model.head().kind) +
                          " head; expected classifier");
    if (task == TaskKind::regress && model.head().kind != HeadKind::regressor)
        throw ConfigError("checkpoint carries a " + to_string(model.head().kind) +
                          " head; expected regressor");

    std::vector<std::vector<int>> sequences;
    std::vector<int> labels;
    std::vector<double> values;
    std::size_t n_classes = 0;

    if (opts.data_kind == "vic") {
        auto docs = load_vic(opts.data_path, true).documents;
        LabelSet set({"long", "short"});
        n_classes = 2;
        for (const auto& d : docs) {
            if (!d.position) continue;
            auto toks = tokenize(d.text);
            if (toks.size() > opts.max_tokens) toks.resize(opts.max_tokens);
            if (toks.empty()) continue;
            sequences.push_back(vocab.numericalize(toks));
            labels.push_back(d.position == Position::long_side ? 0 : 1);
        }
    } else if (opts.data_kind == "fiqa") {
        if (opts.hierarchy_path.empty())
            throw ConfigError("evaluate on FiQA data needs --hierarchy");
        AspectHierarchy h = AspectHierarchy::load(opts.hierarchy_path);
        auto loaded = load_fiqa(opts.data_path, h, true).examples;
        std::vector<LabeledExample> chosen;
        if (opts.split == "all") {
            chosen = loaded;
        } else {
            FiqaSplit split = stratified_split(loaded, 0.8, 0.1, opts.split_seed);
            if (opts.split == "train") chosen = split.train;
            else if (opts.split == "val") chosen = split.val;
            else if (opts.split == "test") chosen = split.test;
            else throw ConfigError("unknown split '" + opts.split + "'");
        }
        TargetField field = target_field_from_string(opts.target);
        LabelSet set = field == TargetField::aspect_l1 ? h.l1_label_set() : h.l2_label_set();
        n_classes = set.size();
        InputMode mode = input_mode_from_string(opts.input_mode);
        for (const auto& ex : chosen) {
            auto toks = example_tokens(ex, mode);
            if (toks.size() > opts.max_tokens) toks.resize(opts.max_tokens);
            sequences.push_back(vocab.numericalize(toks));
            if (task == TaskKind::classify)
                labels.push_back(set.index_of(field == TargetField::aspect_l1 ? ex.aspect_l1
                                                                              : ex.aspect_l2));
            else
                values.push_back(ex.sentiment);
        }
    } else {
        throw ConfigError("unknown data kind '" + opts.data_kind + "'");
    }

    if (sequences.empty()) throw ValidationError("no evaluable examples in dataset");
    if (task == TaskKind::classify &&
        static_cast<int>(n_classes) != model.head().n_classes)
        throw ConfigError("checkpoint classifier has " + std::to_string(model.head().n_classes) +
                          " classes; the declared label set has " + std::to_string(n_classes));

    MetricsRecord record;
    if (task == TaskKind::classify) {
        std::vector<int> preds;
        for (const auto& ids : sequences) {
            auto probs = model.predict(ids);
            preds.push_back(static_cast<int>(
                std::max_element(probs.begin(), probs.end()) - probs.begin()));
        }
        record = compute_classification_metrics(preds, labels, n_classes);
    } else {
        std::vector<double> preds;
        for (const auto& ids : sequences) preds.push_back(model.predict(ids)[0]);
        record = compute_regression_metrics(preds, values);
    }

    json eval_config = {{"task", opts.task},         {"split", opts.split},
                        {"split_seed", opts.split_seed}, {"target", opts.target},
                        {"data_kind", opts.data_kind},   {"input_mode", opts.input_mode},
                        {"max_tokens", opts.max_tokens}};
    json out = {{"task", opts.task},
                {"metrics", record.to_json()},
                {"n_examples", record.n_examples},
                {"checkpoint_hash", hex64(hash_file(opts.checkpoint_path))},
                {"config_hash", config_hash(eval_config)}};
    std::cout << out.dump() << "\n";
    return 0;
}

int run_curve(const CommonOpts& opts) {
    json config = opts.resolve();
    StageKind kind = stage_kind_from_string(config.at("curve").at("stage").get<std::string>());
    if (kind != StageKind::target_classify && kind != StageKind::target_regress)
        throw ConfigError("curve.stage must be target_classify or target_regress");
    StagePlan plan = plan_from_config(config, kind);
    if (kind == StageKind::target_regress) plan.target_field = TargetField::sentiment;
    if (plan.dataset_path.empty()) throw ConfigError("no dataset: set data.path or --data");
    if (plan.hierarchy_path.empty()) throw ConfigError("curve needs data.hierarchy");

    std::optional<Checkpoint> input;
    if (!opts.from_checkpoint.empty()) input = load_checkpoint(opts.from_checkpoint);

    AspectHierarchy hierarchy = AspectHierarchy::load(plan.hierarchy_path);
    auto examples = load_fiqa(plan.dataset_path, hierarchy, plan.strict_loading).examples;
    FiqaSplit split = stratified_split(examples, 0.8, 0.1, plan.split_seed);
    if (split.val.empty())
        throw ValidationError("curve: validation split is empty; dataset too small");
    std::string data_hash = hex64(hash_file(plan.dataset_path));

    std::size_t n_classes = 1;
    if (kind == StageKind::target_classify)
        n_classes = plan.target_field == TargetField::aspect_l1
                        ? hierarchy.l1_labels().size()
                        : hierarchy.l2_labels().size();

    CurveRunner runner = [&](const std::vector<LabeledExample>& subset, std::uint64_t seed) {
        StagePlan cell_plan = plan;
        cell_plan.seed = seed;
        StageData data;
        data.examples = subset;
        data.val_examples = split.val;  // fixed held-out set, never subsampled
        data.hierarchy = hierarchy;
        data.data_hash = data_hash;
        StageResult r = run_stage_on(cell_plan, data, input ? &*input : nullptr);
        if (!r.metrics.task_metrics) throw Error("curve stage produced no task metrics");
        return *r.metrics.task_metrics;
    };

    std::vector<double> fractions = config.at("curve").at("fractions").get<std::vector<double>>();
    std::vector<std::uint64_t> seeds =
        config.at("curve").at("seeds").get<std::vector<std::uint64_t>>();
    std::size_t jobs = config.at("curve").at("jobs").get<std::size_t>();

    CurveTable table = subsample_curve(split.train, fractions, seeds, n_classes, runner, jobs);

    fs::path out_dir(config.at("run").at("out_dir").get<std::string>());
    fs::create_directories(out_dir);
    fs::path csv_path = out_dir / "curve.csv";
    {
        std::ofstream out(csv_path);
        out << table.to_csv();
    }
    write_json_file(table.to_json(), out_dir / "curve.json");
    std::cout << csv_path.string() << "\n";
    return 0;
}

int run_diag_gradcheck(std::uint64_t suite_seed, std::uint64_t encoder_seed, int n_seeds,
                       double eps) {
    bool ok = true;
    for (const auto& rep : diag::run_gradcheck_suite(suite_seed, n_seeds, eps)) {
        std::cout << rep.op << "," << rep.max_rel_err << "\n";
        ok = ok && rep.max_rel_err < 1e-4;
    }
    double enc_worst = 0.0;
    for (int s = 0; s < n_seeds; ++s)
        enc_worst = std::max(enc_worst,
                             diag::encoder_gradcheck(encoder_seed + static_cast<std::uint64_t>(s),
                                                     eps));
    std::cout << "tiny_encoder," << enc_worst << "\n";
    ok = ok && enc_worst < 1e-4;
    if (!ok) {
        std::cerr << "error: gradient check exceeded 1e-4\n";
        return 4;
    }
    return 0;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"staged LSTM transfer-learning pipeline for aspect-based "
                 "sentiment tasks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kArtifactVersion);

    struct TrainCmd {
        const char* name;
        const char* help;
        StageKind kind;
        bool with_from;
        CommonOpts opts;
        CLI::App* cmd = nullptr;
    };
    std::vector<TrainCmd> train_cmds{
        {"pretrain", "train a language model from scratch on a general corpus",
         StageKind::lm_pretrain, false, {}, nullptr},
        {"finetune-lm", "fine-tune a pretrained language model on a domain corpus",
         StageKind::lm_finetune, true, {}, nullptr},
        {"finetune-aux", "fine-tune on the long/short auxiliary classification task",
         StageKind::aux_classify, true, {}, nullptr},
        {"train-classifier", "train the aspect classifier head",
         StageKind::target_classify, true, {}, nullptr},
        {"train-regressor", "train the sentiment regressor head",
         StageKind::target_regress, true, {}, nullptr},
    };
    for (auto& tc : train_cmds) {
        tc.cmd = app.add_subcommand(tc.name, tc.help);
        tc.opts.attach(tc.cmd, tc.with_from);
    }

    EvalOpts eval;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "metrics for a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", eval.checkpoint_path)->required();
    eval_cmd->add_option("--data", eval.data_path)->required();
    eval_cmd->add_option("--task", eval.task, "classify or regress")->required();
    eval_cmd->add_option("--hierarchy", eval.hierarchy_path);
    eval_cmd->add_option("--split", eval.split, "all, train, val, or test");
    eval_cmd->add_option("--split-seed", eval.split_seed);
    eval_cmd->add_option("--data-kind", eval.data_kind, "fiqa or vic");
    eval_cmd->add_option("--target", eval.target, "aspect_l1 or aspect_l2");
    eval_cmd->add_option("--input-mode", eval.input_mode);
    eval_cmd->add_option("--max-tokens", eval.max_tokens);

    CommonOpts curve_opts;
    CLI::App* curve_cmd =
        app.add_subcommand("curve", "learning curve over training subsamples (CSV)");
    curve_opts.attach(curve_cmd, true);

    CLI::App* diag_cmd = app.add_subcommand("diag", "diagnostics");
    diag_cmd->require_subcommand(1);

    std::uint64_t gc_suite_seed = 1234, gc_encoder_seed = 12;
    int gc_seeds = 20;
    double gc_eps = 1e-6;
    CLI::App* gradcheck = diag_cmd->add_subcommand(
        "gradcheck", "finite-difference check of every primitive and the tiny encoder");
    gradcheck->add_option("--seed", gc_suite_seed, "base seed for the primitive suite");
    gradcheck->add_option("--encoder-seed", gc_encoder_seed, "base seed for the encoder check");
    gradcheck->add_option("--seeds", gc_seeds, "seeds per op");
    gradcheck->add_option("--eps", gc_eps);

    std::size_t sd_steps = 100;
    double sd_cut = 0.1, sd_ratio = 32.0, sd_lr = 0.01;
    CLI::App* sched = diag_cmd->add_subcommand("schedule-dump", "print the (t, lr) schedule");
    sched->add_option("--steps", sd_steps);
    sched->add_option("--cut-frac", sd_cut);
    sched->add_option("--ratio", sd_ratio);
    sched->add_option("--lr-max", sd_lr);

    std::string pd_strategy = "gradual";
    std::size_t pd_groups = 5, pd_epochs = 5, pd_k = 0;
    CLI::App* plan_dump = diag_cmd->add_subcommand("plan-dump", "print an unfreeze plan's phases");
    plan_dump->add_option("--strategy", pd_strategy);
    plan_dump->add_option("--groups", pd_groups);
    plan_dump->add_option("--epochs", pd_epochs);
    plan_dump->add_option("--k", pd_k);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (auto& tc : train_cmds)
        if (tc.cmd->parsed()) return run_train_command(tc.opts, tc.kind, tc.name);
    if (eval_cmd->parsed()) return run_evaluate(eval);
    if (curve_cmd->parsed()) return run_curve(curve_opts);
    if (gradcheck->parsed())
        return run_diag_gradcheck(gc_suite_seed, gc_encoder_seed, gc_seeds, gc_eps);
    if (sched->parsed()) {
        std::cout << "t,lr\n";
        for (std::size_t t = 0; t <= sd_steps; ++t)
            std::cout << t << "," << stlr(t, sd_steps, sd_cut, sd_ratio, sd_lr) << "\n";
        return 0;
    }
    if (plan_dump->parsed()) {
        std::vector<std::string> names{"embedding"};
        for (std::size_t l = 0; l + 2 < pd_groups; ++l) names.push_back("lstm_" + std::to_string(l));
        names.push_back("head");
        UnfreezeStrategy strategy = unfreeze_strategy_from_string(pd_strategy);
        UnfreezePlan plan;
        switch (strategy) {
            case UnfreezeStrategy::gradual: plan = gradual_unfreeze_plan(names, pd_epochs); break;
            case UnfreezeStrategy::chain_thaw_full: plan = chain_thaw_full_plan(names); break;
            case UnfreezeStrategy::chain_thaw_partial:
                plan = chain_thaw_partial_plan(names, pd_k == 0 ? names.size() + 2 : pd_k);
                break;
            case UnfreezeStrategy::all_at_once: plan = all_at_once_plan(names, pd_epochs); break;
        }
        for (std::size_t i = 0; i < plan.phases.size(); ++i) {
            std::cout << "phase " << i + 1 << ":";
            for (const auto& g : plan.phases[i].trainable) std::cout << " " << g;
            if (plan.phases[i].until_convergence) std::cout << " (until convergence)";
            else std::cout << " (" << plan.phases[i].epochs << " epochs)";
            std::cout << "\n";
        }
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericsError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 4;
    }
}
