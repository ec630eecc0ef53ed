#pragma once

#include <cstdint>
#include <vector>

#include "absa/autodiff.hpp"
#include "absa/batches.hpp"
#include "absa/rng.hpp"

namespace absa {

struct EncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 64;
    std::size_t hidden_dim = 128;
    std::size_t num_layers = 3;
    double weight_drop_p = 0.5;
    double embed_drop_p = 0.1;
    double variational_drop_p = 0.3;
    bool tie_decoder = true;

    // Last layer emits embed_dim when the decoder is tied, so LM logits can
    // share the embedding matrix.
    std::size_t layer_output_dim(std::size_t layer) const {
        return (layer + 1 == num_layers && tie_decoder) ? embed_dim : hidden_dim;
    }
    std::size_t layer_input_dim(std::size_t layer) const {
        return layer == 0 ? embed_dim : layer_output_dim(layer - 1);
    }
    std::size_t top_dim() const { return layer_output_dim(num_layers - 1); }
    void validate() const;
};

// Explicitly sampled dropout masks for one forward pass. An empty object is
// evaluation mode: no dropout anywhere. Mask entries are 0 or 1/(1-p)
// (inverted dropout), so expectation is preserved.
struct DropoutMasks {
    std::vector<Tensor> weight_drop;          // per layer, shape of the recurrent matrix
    std::vector<Tensor> output_drop;          // per layer [B, H_out], reused at every step
    std::vector<double> embed_row_scale;      // per vocab row; empty disables embedding dropout

    bool empty() const {
        return weight_drop.empty() && output_drop.empty() && embed_row_scale.empty();
    }
    // Weight-drop masks resample per forward; variational/embedding masks are
    // per sequence. batch is the lane count of the window.
    static DropoutMasks sample(const EncoderConfig& cfg, std::size_t batch, Rng& rng);
};

// Per-layer recurrent state, detached from any graph.
struct LstmState {
    std::vector<Tensor> h, c;

    static LstmState zeros(const EncoderConfig& cfg, std::size_t batch);
};

struct EncodeResult {
    std::vector<ad::Var> top_steps;  // top-layer output per step, [B, top_dim]
    LstmState final_state;           // detached copy, for carrying across windows
    // graph-connected final states per layer (unmasked), for losses that
    // probe the recurrence directly
    std::vector<ad::Var> final_h, final_c;
};

// Stacked LSTM over token ids with weight-dropped recurrent matrices,
// variational dropout on layer outputs, and embedding(-row) dropout.
class LstmEncoder {
public:
    LstmEncoder(EncoderConfig cfg, Rng& rng);  // fresh seeded init

    const EncoderConfig& config() const { return cfg_; }
    const ad::Var& embedding() const { return embedding_; }

    struct Layer {
        ad::Var w_input;  // [in, 4H]
        ad::Var w_recur;  // [H, 4H]
        ad::Var bias;     // [1, 4H]
    };
    const std::vector<Layer>& layers() const { return layers_; }

    EncodeResult forward(const IdMatrix& ids, const LstmState& state,
                         const DropoutMasks& masks) const;

    // Parameter access in a stable order: embedding, then per-layer
    // (w_input, w_recur, bias).
    std::vector<ad::Var> parameters() const;
    void set_parameters(const std::vector<ad::Var>& params);

private:
    EncoderConfig cfg_;
    ad::Var embedding_;
    std::vector<Layer> layers_;
};

}  // namespace absa
