#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "absa/checkpoint.hpp"
#include "absa/data.hpp"
#include "absa/metrics.hpp"
#include "absa/model.hpp"
#include "absa/schedule.hpp"
#include "absa/unfreeze.hpp"

namespace absa {

enum class StageKind { lm_pretrain, lm_finetune, aux_classify, target_classify, target_regress };

StageKind stage_kind_from_string(const std::string& s);
std::string to_string(StageKind k);

enum class TargetField { aspect_l1, aspect_l2, sentiment };

TargetField target_field_from_string(const std::string& s);
std::string to_string(TargetField f);

// Declarative description of one training stage. Everything that influences
// the result lives here, so identical plans give identical checkpoints.
struct StagePlan {
    StageKind kind = StageKind::lm_pretrain;
    std::string stage_name;  // provenance entry; defaults to the kind name
    std::string dataset_path;
    std::string hierarchy_path;  // FiQA stages
    std::uint64_t seed = 42;
    bool strict_loading = true;

    // data handling
    double val_fraction = 0.1;
    bool val_on_train = false;      // validate on the training split (overfit checks)
    std::uint64_t split_seed = 42;  // FiQA stratified split
    InputMode input_mode = InputMode::sentence_target;
    TargetField target_field = TargetField::aspect_l2;
    std::size_t max_tokens = 400;  // long-document truncation
    std::size_t vocab_max_size = 30000;
    std::size_t vocab_min_freq = 2;

    // model for fresh initialization; vocab_size is filled from the data.
    // Ignored when an input checkpoint supplies the encoder.
    EncoderConfig encoder;
    std::size_t head_hidden = 64;
    bool transfer_head_hidden = false;  // coarse->fine: also carry the head's inner linear block

    // optimization
    OptimizerConfig optimizer;
    double clip_norm = 0.25;
    StlrParams schedule;
    double disc_decay = 2.6;
    UnfreezeStrategy strategy = UnfreezeStrategy::all_at_once;
    std::size_t chain_thaw_k = 0;  // 0 = full sequence
    std::size_t epochs = 4;
    std::size_t max_epochs_per_phase = 8;  // cap for until-convergence phases
    std::size_t patience = 3;
    double min_delta = 1e-4;
    std::size_t batch_size = 16;
    std::size_t bptt_len = 20;

    std::string config_hash;  // hash of the resolved config, recorded in provenance

    bool is_lm_stage() const {
        return kind == StageKind::lm_pretrain || kind == StageKind::lm_finetune;
    }
    bool is_regression() const { return kind == StageKind::target_regress; }
};

struct EpochRecord {
    std::size_t phase = 0;
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct StageMetrics {
    std::vector<EpochRecord> epochs;
    double final_val_loss = 0.0;
    double val_perplexity = 0.0;  // LM stages
    std::optional<MetricsRecord> task_metrics;
    std::size_t steps = 0;
    std::size_t n_train = 0, n_val = 0;

    nlohmann::json to_json() const;
};

struct StageResult {
    Checkpoint checkpoint;
    StageMetrics metrics;
};

// Runs one stage: prepares data, builds or adapts the model (embedding
// transfer when vocabularies differ, head swap when the task changes),
// trains per the unfreeze plan with STLR and discriminative learning rates,
// and returns a checkpoint with appended provenance. Deterministic given
// (plan, input checkpoint).
StageResult run_stage(const StagePlan& plan, const Checkpoint* input);

// In-memory dataset variant used by harnesses that subsample or synthesize
// training sets. FiQA-style stages take examples; LM stages take documents.
struct StageData {
    std::vector<LabeledExample> examples;          // target_* stages
    std::vector<CorpusDocument> documents;         // lm/aux stages
    std::optional<AspectHierarchy> hierarchy;      // target_* stages
    std::string data_hash;                         // provenance
    // When non-empty, `examples` is taken as the training set verbatim and
    // this is the held-out evaluation set (no internal split). Harnesses
    // that subsample training data use this to pin the evaluation set.
    std::vector<LabeledExample> val_examples;
};

StageResult run_stage_on(const StagePlan& plan, const StageData& data, const Checkpoint* input);

// Stratified-by-coarse-aspect deterministic split. Fractions are cumulative:
// (train, val, test) with test = remainder.
struct FiqaSplit {
    std::vector<LabeledExample> train, val, test;
};
FiqaSplit stratified_split(const std::vector<LabeledExample>& examples, double train_frac,
                           double val_frac, std::uint64_t seed);

}  // namespace absa
