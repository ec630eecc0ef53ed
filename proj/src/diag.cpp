#include "absa/diag.hpp"

#include <algorithm>
#include <functional>

#include "absa/autodiff.hpp"
#include "absa/encoder.hpp"
#include "absa/rng.hpp"

namespace absa::diag {

namespace {

using ad::Var;

Tensor rand_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(lo, hi);
    return t;
}

// Evenly spaced shuffled values with a small jitter. Separation keeps ops
// with kinks (relu, max) finite-difference-checkable: no value sits within
// eps of another value in the same tensor, or of zero. The jitter breaks the
// exact rational relations of a bare grid, which can otherwise cancel the
// max- and mean-path gradients of a pooled coordinate to exactly zero.
Tensor spread_tensor(Rng& rng, Shape shape) {
    Tensor t(std::move(shape));
    std::size_t n = t.size();
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i)
        vals[i] = -1.0 + (2.0 * (static_cast<double>(i) + 0.5) +
                          0.8 * (rng.next_double() - 0.5)) /
                             static_cast<double>(n);
    rng.shuffle(vals);
    for (std::size_t i = 0; i < n; ++i) t.at(i) = vals[i];
    return t;
}

struct Case {
    std::string name;
    // builds (inputs, scalar fn) for one random draw
    std::function<std::pair<std::vector<Tensor>, ad::ScalarFn>(Rng&)> build;
};

std::vector<Case> make_cases() {
    std::vector<Case> cases;

    cases.push_back({"add", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 4}), rand_tensor(rng, {3, 4})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) { return ad::sum(ad::add(v[0], v[1])); };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"add_bias_row", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 4}), rand_tensor(rng, {4})};
        // square the sum so the bias gradient is input-dependent
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var s = ad::add(v[0], v[1]);
            return ad::sum(ad::mul(s, s));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"sub", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {2, 5}), rand_tensor(rng, {2, 5})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var d = ad::sub(v[0], v[1]);
            return ad::sum(ad::mul(d, d));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"mul", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 3}), rand_tensor(rng, {3, 3})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) { return ad::sum(ad::mul(v[0], v[1])); };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"scale", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {6})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var s = ad::scale(v[0], 2.5);
            return ad::sum(ad::mul(s, s));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"matmul", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 4}), rand_tensor(rng, {4, 2})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var m = ad::matmul(v[0], v[1]);
            return ad::sum(ad::mul(m, m));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"matmul_nt", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 4}), rand_tensor(rng, {2, 4})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var m = ad::matmul_nt(v[0], v[1]);
            return ad::sum(ad::mul(m, m));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"tanh", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 4}, -2.0, 2.0)};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var y = ad::tanh(v[0]);
            return ad::sum(ad::mul(y, y));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"sigmoid", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 4}, -2.0, 2.0)};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var y = ad::sigmoid(v[0]);
            return ad::sum(ad::mul(y, y));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"relu", [](Rng& rng) {
        std::vector<Tensor> in{spread_tensor(rng, {4, 5})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var y = ad::relu(v[0]);
            return ad::sum(ad::mul(y, y));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"softmax", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 5}, -2.0, 2.0), rand_tensor(rng, {3, 5})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            return ad::sum(ad::mul(ad::softmax(v[0]), v[1]));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"sum", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {7})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) { return ad::sum(v[0]); };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"mean", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 4})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var y = ad::mean(v[0]);
            return ad::mul(y, y);
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"row", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {4, 3})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var r = ad::row(v[0], 2);
            return ad::sum(ad::mul(r, r));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"slice_cols", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 8})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var s = ad::slice_cols(v[0], 2, 6);
            return ad::sum(ad::mul(s, s));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"concat_cols", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 2}), rand_tensor(rng, {3, 4})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var c = ad::concat_cols({v[0], v[1]});
            return ad::sum(ad::mul(c, c));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"embedding_lookup", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {6, 3})};
        std::vector<int> ids{1, 4, 1, 0};  // repeated id exercises accumulation
        ad::ScalarFn fn = [ids](const std::vector<Var>& v) {
            Var e = ad::embedding_lookup(v[0], ids);
            return ad::sum(ad::mul(e, e));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"softmax_cross_entropy", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {4, 5}, -2.0, 2.0)};
        std::vector<int> targets{0, 3, 1, 4};
        ad::ScalarFn fn = [targets](const std::vector<Var>& v) {
            return ad::softmax_cross_entropy(v[0], targets);
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"mse", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {3, 2}), rand_tensor(rng, {3, 2})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) { return ad::mse(v[0], v[1]); };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"dropout", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {4, 4})};
        Tensor mask(Shape{4, 4});
        for (std::size_t i = 0; i < mask.size(); ++i) mask.at(i) = rng.bernoulli(0.5) ? 2.0 : 0.0;
        ad::ScalarFn fn = [mask](const std::vector<Var>& v) {
            Var y = ad::dropout(v[0], ad::constant(mask));
            return ad::sum(ad::mul(y, y));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"max_over_time", [](Rng& rng) {
        std::vector<Tensor> in{spread_tensor(rng, {6, 4})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var y = ad::max_over_time(v[0], 4);
            return ad::sum(ad::mul(y, y));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"mean_over_time", [](Rng& rng) {
        std::vector<Tensor> in{rand_tensor(rng, {6, 4})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var y = ad::mean_over_time(v[0], 4);
            return ad::sum(ad::mul(y, y));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"concat_pool", [](Rng& rng) {
        std::vector<Tensor> in{spread_tensor(rng, {5, 3})};
        ad::ScalarFn fn = [](const std::vector<Var>& v) {
            Var y = ad::concat_pool(v[0], 3);
            return ad::sum(ad::mul(y, y));
        };
        return std::make_pair(in, fn);
    }});
    cases.push_back({"concat_pool_steps", [](Rng& rng) {
        // one spread over all steps: max ties across steps would break FD
        Tensor all = spread_tensor(rng, {36});
        std::vector<Tensor> in;
        for (int s = 0; s < 3; ++s)
            in.emplace_back(Shape{3, 4},
                            std::vector<double>(all.data() + s * 12, all.data() + (s + 1) * 12));
        std::vector<std::size_t> lengths{3, 1, 2};
        ad::ScalarFn fn = [lengths](const std::vector<Var>& v) {
            Var y = ad::concat_pool_steps({v[0], v[1], v[2]}, lengths);
            return ad::sum(ad::mul(y, y));
        };
        return std::make_pair(in, fn);
    }});
    return cases;
}

}  // namespace

std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t base_seed, int n_seeds, double eps) {
    std::vector<GradCheckReport> reports;
    for (const auto& c : make_cases()) {
        GradCheckReport rep{c.name, 0.0};
        for (int s = 0; s < n_seeds; ++s) {
            Rng rng(base_seed + static_cast<std::uint64_t>(s) * 1000003ull);
            auto [inputs, fn] = c.build(rng);
            rep.max_rel_err = std::max(rep.max_rel_err, ad::gradient_check(fn, inputs, eps));
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

double encoder_gradcheck(std::uint64_t seed, double eps) {
    EncoderConfig cfg;
    cfg.vocab_size = 20;
    cfg.embed_dim = 8;
    cfg.hidden_dim = 12;
    cfg.num_layers = 2;
    cfg.weight_drop_p = 0.5;  // masked entries have exactly zero gradient
    cfg.embed_drop_p = 0.0;
    cfg.variational_drop_p = 0.0;

    Rng rng(seed);
    Rng enc_rng = rng.fork("encoder");
    LstmEncoder encoder(cfg, enc_rng);

    const std::size_t batch = 3, steps = 4;
    Rng data_rng = rng.fork("data");
    IdMatrix ids(batch, steps);
    for (auto& v : ids.data) v = static_cast<int>(data_rng.below(cfg.vocab_size));
    Rng mask_rng = rng.fork("masks");
    DropoutMasks masks = DropoutMasks::sample(cfg, batch, mask_rng);

    // random nonzero initial state: every recurrent weight sees an O(1)
    // input at the first step
    auto spread = [&](Shape shape) {
        Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) {
            double mag = data_rng.uniform(0.5, 1.25);
            t.at(i) = data_rng.bernoulli(0.5) ? mag : -mag;
        }
        return t;
    };
    LstmState state;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        state.h.push_back(spread({batch, cfg.layer_output_dim(l)}));
        state.c.push_back(spread({batch, cfg.layer_output_dim(l)}));
    }

    // O(1)-sensitivity probes of every step's output and the final state
    std::vector<Tensor> probes;
    for (std::size_t t = 0; t < steps; ++t) probes.push_back(spread({batch, cfg.top_dim()}));
    std::vector<Tensor> h_probes, c_probes;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        h_probes.push_back(spread({batch, cfg.layer_output_dim(l)}));
        c_probes.push_back(spread({batch, cfg.layer_output_dim(l)}));
    }

    std::vector<Tensor> init;
    for (const auto& p : encoder.parameters()) init.push_back(p.value());
    // O(1) embedding values: keeps every input-weight path well above the
    // FD noise floor (the trained-scale init of ±0.1 is checked implicitly,
    // gradients being linear in the lookup values)
    init[0] = spread({cfg.vocab_size, cfg.embed_dim});
    ad::ScalarFn fn = [&](const std::vector<ad::Var>& vars) {
        LstmEncoder enc = encoder;
        enc.set_parameters(vars);
        EncodeResult r = enc.forward(ids, state, masks);
        ad::Var loss = ad::sum(ad::mul(r.top_steps[0], ad::constant(probes[0])));
        for (std::size_t t = 1; t < steps; ++t)
            loss = ad::add(loss, ad::sum(ad::mul(r.top_steps[t], ad::constant(probes[t]))));
        for (std::size_t l = 0; l < cfg.num_layers; ++l) {
            loss = ad::add(loss, ad::sum(ad::mul(r.final_h[l], ad::constant(h_probes[l]))));
            loss = ad::add(loss, ad::sum(ad::mul(r.final_c[l], ad::constant(c_probes[l]))));
        }
        return ad::scale(loss, 0.125);  // keep |loss| near 1 for a low FD noise floor
    };
    return ad::gradient_check(fn, init, eps);
}

}  // namespace absa::diag
