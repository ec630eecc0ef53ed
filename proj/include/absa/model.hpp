#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "absa/encoder.hpp"
#include "absa/optim.hpp"

namespace absa {

enum class HeadKind { lm_decoder, classifier, regressor };

std::string to_string(HeadKind k);
HeadKind head_kind_from_string(const std::string& s);

struct HeadSpec {
    HeadKind kind = HeadKind::lm_decoder;
    int n_classes = 0;         // classifier only
    std::size_t hidden = 64;   // width of the task heads' inner layer

    static HeadSpec lm() { return {HeadKind::lm_decoder, 0, 0}; }
    static HeadSpec classifier(int n_classes, std::size_t hidden = 64) {
        return {HeadKind::classifier, n_classes, hidden};
    }
    static HeadSpec regressor(std::size_t hidden = 64) {
        return {HeadKind::regressor, 1, hidden};
    }
};

// Encoder plus exactly one task head. Layer-group ordering for unfreezing is
// [embedding, lstm_0, ..., lstm_{L-1}, head].
class Model {
public:
    Model(EncoderConfig cfg, HeadSpec head, std::uint64_t seed);

    const LstmEncoder& encoder() const { return encoder_; }
    const HeadSpec& head() const { return head_; }

    // Groups are rebuilt views over the current parameters; trainable flags
    // and lr scales live with the caller's copy.
    std::vector<ParameterGroup> groups() const;
    std::vector<std::string> group_names() const;

    // Flat parameter list: encoder parameters then head parameters.
    std::vector<ad::Var> parameters() const;
    std::vector<std::pair<std::string, ad::Var>> named_parameters() const;
    void set_parameters(const std::vector<ad::Var>& params);

    // Replaces the head, preserving encoder tensors bit-exactly. The new
    // head is freshly initialized from the seed.
    void swap_head(HeadSpec spec, std::uint64_t seed);

    // --- LM path ---
    // logits over the vocabulary for rows of top-layer hidden state
    ad::Var lm_decode(const ad::Var& hidden) const;
    // mean next-token cross-entropy over one BPTT window; advances `state`
    ad::Var lm_window_loss(const IdMatrix& input, const IdMatrix& target, LstmState& state,
                           const DropoutMasks& masks) const;
    // exp(mean cross-entropy) over a full id stream, no dropout
    double perplexity(const std::vector<int>& ids, std::size_t batch_size,
                      std::size_t bptt_len) const;

    // --- task path ---
    // classifier: [B, n_classes] logits; regressor: [B, 1] tanh output
    ad::Var task_output(const ClsBatch& batch, const DropoutMasks& masks) const;
    ad::Var task_loss(const ClsBatch& batch, const DropoutMasks& masks) const;

    // class probabilities (classifier) or {score} (regressor); dropout off
    std::vector<double> predict(const std::vector<int>& ids) const;

private:
    void init_head(std::uint64_t seed);
    ad::Var pooled_features(const ClsBatch& batch, const DropoutMasks& masks) const;
    ad::Var head_forward(const ad::Var& pooled) const;

    LstmEncoder encoder_;
    HeadSpec head_;
    // lm: [dec_bias] tied, [dec_weight, dec_bias] untied
    // classifier/regressor: [w1, b1, w2, b2]
    std::vector<ad::Var> head_params_;
};

// FNV-1a over the encoder parameter bytes in declaration order.
std::uint64_t encoder_checksum(const Model& model);

}  // namespace absa
