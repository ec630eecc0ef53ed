#include "absa/encoder.hpp"

#include <cmath>

#include "absa/errors.hpp"

namespace absa {

void EncoderConfig::validate() const {
    if (vocab_size < Vocabulary::num_reserved)
        throw ConfigError("encoder: vocab_size must cover the reserved tokens");
    if (embed_dim == 0 || hidden_dim == 0 || num_layers == 0)
        throw ConfigError("encoder: embed_dim, hidden_dim and num_layers must be positive");
    for (double p : {weight_drop_p, embed_drop_p, variational_drop_p})
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError("encoder: dropout probabilities must lie in [0,1]");
}

namespace {

// Bernoulli keep mask scaled by 1/(1-p); p=1 zeroes everything.
double mask_value(Rng& rng, double p) {
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    return rng.bernoulli(1.0 - p) ? 1.0 / (1.0 - p) : 0.0;
}

Tensor mask_tensor(Rng& rng, Shape shape, double p) {
    Tensor m(std::move(shape));
    for (std::size_t i = 0; i < m.size(); ++i) m.at(i) = mask_value(rng, p);
    return m;
}

Tensor uniform_tensor(Rng& rng, Shape shape, double bound) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

DropoutMasks DropoutMasks::sample(const EncoderConfig& cfg, std::size_t batch, Rng& rng) {
    DropoutMasks m;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        std::size_t h = cfg.layer_output_dim(l);
        m.weight_drop.push_back(mask_tensor(rng, {h, 4 * h}, cfg.weight_drop_p));
        m.output_drop.push_back(mask_tensor(rng, {batch, h}, cfg.variational_drop_p));
    }
    m.embed_row_scale.resize(cfg.vocab_size);
    for (std::size_t v = 0; v < cfg.vocab_size; ++v)
        m.embed_row_scale[v] = mask_value(rng, cfg.embed_drop_p);
    return m;
}

LstmState LstmState::zeros(const EncoderConfig& cfg, std::size_t batch) {
    LstmState s;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        s.h.push_back(Tensor(Shape{batch, cfg.layer_output_dim(l)}));
        s.c.push_back(Tensor(Shape{batch, cfg.layer_output_dim(l)}));
    }
    return s;
}

LstmEncoder::LstmEncoder(EncoderConfig cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    embedding_ = ad::leaf(uniform_tensor(rng, {cfg_.vocab_size, cfg_.embed_dim}, 0.1), true);
    for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
        std::size_t in = cfg_.layer_input_dim(l);
        std::size_t h = cfg_.layer_output_dim(l);
        double bound = 1.0 / std::sqrt(static_cast<double>(h));
        Layer layer;
        layer.w_input = ad::leaf(uniform_tensor(rng, {in, 4 * h}, bound), true);
        layer.w_recur = ad::leaf(uniform_tensor(rng, {h, 4 * h}, bound), true);
        Tensor b(Shape{1, 4 * h});
        for (std::size_t j = h; j < 2 * h; ++j) b.at(0, j) = 1.0;  // forget gate starts open
        layer.bias = ad::leaf(std::move(b), true);
        layers_.push_back(std::move(layer));
    }
}

EncodeResult LstmEncoder::forward(const IdMatrix& ids, const LstmState& state,
                                  const DropoutMasks& masks) const {
    std::size_t batch = ids.rows, steps = ids.cols;
    if (state.h.size() != cfg_.num_layers || state.c.size() != cfg_.num_layers)
        throw ShapeError("lstm_forward: state has " + std::to_string(state.h.size()) +
                         " layers, config has " + std::to_string(cfg_.num_layers));
    for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
        Shape want{batch, cfg_.layer_output_dim(l)};
        if (state.h[l].shape() != want || state.c[l].shape() != want)
            throw ShapeError("lstm_forward: state shape " + shape_str(state.h[l].shape()) +
                             " does not match expected " + shape_str(want));
    }
    bool use_masks = !masks.empty();
    if (use_masks &&
        (masks.weight_drop.size() != cfg_.num_layers || masks.output_drop.size() != cfg_.num_layers))
        throw ShapeError("lstm_forward: masks do not cover every layer");

    // effective recurrent matrices, built once per forward
    std::vector<ad::Var> w_recur_eff;
    for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
        if (use_masks)
            w_recur_eff.push_back(ad::mul(layers_[l].w_recur, ad::constant(masks.weight_drop[l])));
        else
            w_recur_eff.push_back(layers_[l].w_recur);
    }

    std::vector<ad::Var> h(cfg_.num_layers), c(cfg_.num_layers);
    for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
        h[l] = ad::constant(state.h[l]);
        c[l] = ad::constant(state.c[l]);
    }

    EncodeResult result;
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<int> col = ids.column(t);
        ad::Var x = ad::embedding_lookup(embedding_, col);
        if (use_masks && !masks.embed_row_scale.empty()) {
            Tensor em(Shape{batch, cfg_.embed_dim});
            for (std::size_t b = 0; b < batch; ++b) {
                double s = masks.embed_row_scale[static_cast<std::size_t>(col[b])];
                for (std::size_t j = 0; j < cfg_.embed_dim; ++j) em.at(b, j) = s;
            }
            x = ad::dropout(x, ad::constant(em));
        }
        for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
            std::size_t hd = cfg_.layer_output_dim(l);
            ad::Var gates = ad::add(
                ad::add(ad::matmul(x, layers_[l].w_input), ad::matmul(h[l], w_recur_eff[l])),
                layers_[l].bias);
            ad::Var gi = ad::sigmoid(ad::slice_cols(gates, 0, hd));
            ad::Var gf = ad::sigmoid(ad::slice_cols(gates, hd, 2 * hd));
            ad::Var gg = ad::tanh(ad::slice_cols(gates, 2 * hd, 3 * hd));
            ad::Var go = ad::sigmoid(ad::slice_cols(gates, 3 * hd, 4 * hd));
            c[l] = ad::add(ad::mul(gf, c[l]), ad::mul(gi, gg));
            h[l] = ad::mul(go, ad::tanh(c[l]));
            // variational dropout on the layer's output path only; the
            // recurrent carry stays unmasked (weight drop regularizes it)
            x = use_masks ? ad::dropout(h[l], ad::constant(masks.output_drop[l])) : h[l];
        }
        result.top_steps.push_back(x);
    }

    for (std::size_t l = 0; l < cfg_.num_layers; ++l) {
        result.final_state.h.push_back(h[l].value());
        result.final_state.c.push_back(c[l].value());
        result.final_h.push_back(h[l]);
        result.final_c.push_back(c[l]);
    }
    return result;
}

std::vector<ad::Var> LstmEncoder::parameters() const {
    std::vector<ad::Var> out{embedding_};
    for (const auto& l : layers_) {
        out.push_back(l.w_input);
        out.push_back(l.w_recur);
        out.push_back(l.bias);
    }
    return out;
}

void LstmEncoder::set_parameters(const std::vector<ad::Var>& params) {
    if (params.size() != 1 + 3 * layers_.size())
        throw ShapeError("encoder: expected " + std::to_string(1 + 3 * layers_.size()) +
                         " parameter tensors, got " + std::to_string(params.size()));
    std::size_t i = 0;
    auto take = [&](const ad::Var& current) {
        const ad::Var& next = params[i++];
        if (next.shape() != current.shape())
            throw ShapeError("encoder: parameter shape " + shape_str(next.shape()) +
                             " does not match " + shape_str(current.shape()));
        return next;
    };
    embedding_ = take(embedding_);
    for (auto& l : layers_) {
        l.w_input = take(l.w_input);
        l.w_recur = take(l.w_recur);
        l.bias = take(l.bias);
    }
}

}  // namespace absa
