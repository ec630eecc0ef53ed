#include "absa/model.hpp"

#include <cmath>

#include "absa/errors.hpp"
#include "absa/hash.hpp"

namespace absa {

std::string to_string(HeadKind k) {
    switch (k) {
        case HeadKind::lm_decoder: return "lm_decoder";
        case HeadKind::classifier: return "classifier";
        case HeadKind::regressor: return "regressor";
    }
    return "?";
}

HeadKind head_kind_from_string(const std::string& s) {
    if (s == "lm_decoder") return HeadKind::lm_decoder;
    if (s == "classifier") return HeadKind::classifier;
    if (s == "regressor") return HeadKind::regressor;
    throw ConfigError("unknown head kind '" + s + "'");
}

namespace {

Tensor uniform_tensor(Rng& rng, Shape shape, double bound) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(-bound, bound);
    return t;
}

ad::Var init_linear(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return ad::leaf(uniform_tensor(rng, {fan_in, fan_out}, bound), true);
}

}  // namespace

Model::Model(EncoderConfig cfg, HeadSpec head, std::uint64_t seed)
    : encoder_([&] {
          Rng enc_rng = Rng(seed).fork("encoder");
          return LstmEncoder(cfg, enc_rng);
      }()),
      head_(head) {
    init_head(seed);
}

void Model::init_head(std::uint64_t seed) {
    Rng rng = Rng(seed).fork("head");
    head_params_.clear();
    const EncoderConfig& cfg = encoder_.config();
    switch (head_.kind) {
        case HeadKind::lm_decoder: {
            if (!cfg.tie_decoder)
                head_params_.push_back(init_linear(rng, cfg.vocab_size, cfg.top_dim()));
            head_params_.push_back(ad::leaf(Tensor(Shape{1, cfg.vocab_size}), true));  // bias
            break;
        }
        case HeadKind::classifier:
        case HeadKind::regressor: {
            int width = head_.kind == HeadKind::regressor ? 1 : head_.n_classes;
            if (width < 1)
                throw ConfigError("classifier head needs n_classes >= 1, got " +
                                  std::to_string(width));
            std::size_t in = 3 * cfg.top_dim();
            std::size_t hid = head_.hidden == 0 ? 1 : head_.hidden;
            head_params_.push_back(init_linear(rng, in, hid));                     // w1
            head_params_.push_back(ad::leaf(Tensor(Shape{1, hid}), true));         // b1
            head_params_.push_back(init_linear(rng, hid, static_cast<std::size_t>(width)));  // w2
            head_params_.push_back(
                ad::leaf(Tensor(Shape{1, static_cast<std::size_t>(width)}), true));  // b2
            break;
        }
    }
}

void Model::swap_head(HeadSpec spec, std::uint64_t seed) {
    head_ = spec;
    init_head(seed);
}

std::vector<ParameterGroup> Model::groups() const {
    std::vector<ParameterGroup> gs;
    gs.push_back({"embedding", {encoder_.embedding()}, true, 1.0});
    const auto& layers = encoder_.layers();
    for (std::size_t l = 0; l < layers.size(); ++l)
        gs.push_back({"lstm_" + std::to_string(l),
                      {layers[l].w_input, layers[l].w_recur, layers[l].bias},
                      true,
                      1.0});
    gs.push_back({"head", head_params_, true, 1.0});
    return gs;
}

std::vector<std::string> Model::group_names() const {
    std::vector<std::string> names{"embedding"};
    for (std::size_t l = 0; l < encoder_.layers().size(); ++l)
        names.push_back("lstm_" + std::to_string(l));
    names.push_back("head");
    return names;
}

std::vector<ad::Var> Model::parameters() const {
    std::vector<ad::Var> out = encoder_.parameters();
    out.insert(out.end(), head_params_.begin(), head_params_.end());
    return out;
}

std::vector<std::pair<std::string, ad::Var>> Model::named_parameters() const {
    std::vector<std::pair<std::string, ad::Var>> out;
    out.emplace_back("encoder.embedding", encoder_.embedding());
    const auto& layers = encoder_.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        std::string base = "encoder.lstm_" + std::to_string(l);
        out.emplace_back(base + ".w_input", layers[l].w_input);
        out.emplace_back(base + ".w_recur", layers[l].w_recur);
        out.emplace_back(base + ".bias", layers[l].bias);
    }
    for (std::size_t i = 0; i < head_params_.size(); ++i)
        out.emplace_back("head." + std::to_string(i), head_params_[i]);
    return out;
}

void Model::set_parameters(const std::vector<ad::Var>& params) {
    std::size_t n_enc = encoder_.parameters().size();
    if (params.size() != n_enc + head_params_.size())
        throw ShapeError("model: expected " + std::to_string(n_enc + head_params_.size()) +
                         " parameter tensors, got " + std::to_string(params.size()));
    encoder_.set_parameters({params.begin(), params.begin() + static_cast<std::ptrdiff_t>(n_enc)});
    for (std::size_t i = 0; i < head_params_.size(); ++i) {
        const ad::Var& next = params[n_enc + i];
        if (next.shape() != head_params_[i].shape())
            throw ShapeError("model: head parameter shape " + shape_str(next.shape()) +
                             " does not match " + shape_str(head_params_[i].shape()));
        head_params_[i] = next;
    }
}

ad::Var Model::lm_decode(const ad::Var& hidden) const {
    if (head_.kind != HeadKind::lm_decoder)
        throw ConfigError("lm_decode: model carries a " + to_string(head_.kind) + " head");
    const EncoderConfig& cfg = encoder_.config();
    if (hidden.cols() != cfg.top_dim())
        throw ShapeError("lm_decode: hidden width " + std::to_string(hidden.cols()) +
                         " does not match encoder output " + std::to_string(cfg.top_dim()));
    if (cfg.tie_decoder) {
        if (head_params_.size() != 1)
            throw ConfigError("lm_decode: tied decoder expects only a bias tensor");
        return ad::add(ad::matmul_nt(hidden, encoder_.embedding()), head_params_[0]);
    }
    if (head_params_.size() != 2)
        throw ConfigError("lm_decode: decoder weight missing with tying disabled");
    return ad::add(ad::matmul_nt(hidden, head_params_[0]), head_params_[1]);
}

ad::Var Model::lm_window_loss(const IdMatrix& input, const IdMatrix& target, LstmState& state,
                              const DropoutMasks& masks) const {
    if (input.rows != target.rows || input.cols != target.cols)
        throw ShapeError("lm_window_loss: input and target shapes differ");
    EncodeResult enc = encoder_.forward(input, state, masks);
    ad::Var total;
    for (std::size_t t = 0; t < enc.top_steps.size(); ++t) {
        ad::Var logits = lm_decode(enc.top_steps[t]);
        ad::Var step_loss = ad::softmax_cross_entropy(logits, target.column(t));
        total = t == 0 ? step_loss : ad::add(total, step_loss);
    }
    state = std::move(enc.final_state);
    return ad::scale(total, 1.0 / static_cast<double>(input.cols));
}

double Model::perplexity(const std::vector<int>& ids, std::size_t batch_size,
                         std::size_t bptt_len) const {
    LmBatchStream stream(ids, batch_size, bptt_len);
    LstmState state = LstmState::zeros(encoder_.config(), batch_size);
    DropoutMasks none;
    double total_ce = 0.0;
    std::size_t windows = stream.num_windows();
    if (windows == 0)
        throw ValidationError("perplexity: stream too short for one BPTT window");
    for (std::size_t k = 0; k < windows; ++k) {
        auto [input, target] = stream.window(k);
        ad::Var loss = lm_window_loss(input, target, state, none);
        total_ce += loss.value().item();
    }
    return std::exp(total_ce / static_cast<double>(windows));
}

ad::Var Model::pooled_features(const ClsBatch& batch, const DropoutMasks& masks) const {
    LstmState state = LstmState::zeros(encoder_.config(), batch.ids.rows);
    EncodeResult enc = encoder_.forward(batch.ids, state, masks);
    return ad::concat_pool_steps(enc.top_steps, batch.lengths);
}

ad::Var Model::head_forward(const ad::Var& pooled) const {
    if (head_.kind == HeadKind::lm_decoder)
        throw ConfigError("predict: model carries an lm_decoder head; use lm_decode");
    ad::Var h1 = ad::relu(ad::add(ad::matmul(pooled, head_params_[0]), head_params_[1]));
    ad::Var out = ad::add(ad::matmul(h1, head_params_[2]), head_params_[3]);
    return head_.kind == HeadKind::regressor ? ad::tanh(out) : out;
}

ad::Var Model::task_output(const ClsBatch& batch, const DropoutMasks& masks) const {
    return head_forward(pooled_features(batch, masks));
}

ad::Var Model::task_loss(const ClsBatch& batch, const DropoutMasks& masks) const {
    ad::Var out = task_output(batch, masks);
    if (head_.kind == HeadKind::classifier)
        return ad::softmax_cross_entropy(out, batch.labels);
    Tensor targets(Shape{batch.values.size(), 1});
    for (std::size_t i = 0; i < batch.values.size(); ++i) targets.at(i) = batch.values[i];
    return ad::mse(out, ad::constant(targets));
}

std::vector<double> Model::predict(const std::vector<int>& ids) const {
    if (ids.empty()) throw ValidationError("predict: empty token sequence");
    ClsBatch batch;
    batch.ids = IdMatrix(1, ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) batch.ids.at(0, t) = ids[t];
    batch.lengths = {ids.size()};
    batch.labels = {0};
    batch.values = {0.0};
    DropoutMasks none;
    ad::Var out = task_output(batch, none);
    if (head_.kind == HeadKind::regressor) return {out.value().at(0)};
    ad::Var probs = ad::softmax(out);
    const Tensor& p = probs.value();
    return {p.values().begin(), p.values().end()};
}

std::uint64_t encoder_checksum(const Model& model) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const ad::Var& p : model.encoder().parameters()) {
        const Tensor& t = p.value();
        h = fnv1a(t.data(), t.size() * sizeof(double), h);
    }
    return h;
}

}  // namespace absa
