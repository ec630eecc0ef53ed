#include "absa/optim.hpp"

#include <cmath>

#include "absa/errors.hpp"

namespace absa {

void Optimizer::step(std::vector<ParameterGroup>& groups, const std::vector<double>& lrs) {
    if (lrs.size() != groups.size())
        throw ConfigError("optimizer: " + std::to_string(lrs.size()) + " learning rates for " +
                          std::to_string(groups.size()) + " groups");
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
        if (groups[gi].trainable && !(lrs[gi] > 0.0))
            throw ConfigError("optimizer: non-positive learning rate for trainable group '" +
                              groups[gi].name + "'");

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        ParameterGroup& g = groups[gi];
        if (!g.trainable) continue;
        double lr = lrs[gi] * g.lr_scale;
        for (ad::Var& p : g.tensors) {
            if (!p.has_grad())
                throw Error("optimizer: missing gradient for tensor in group '" + g.name + "'");
            if (lr == 0.0) continue;
            Tensor& w = p.mutable_value();
            const Tensor& grad = p.grad();
            Slot& s = state_[p.node().get()];
            if (!s.init) {
                s.m = Tensor::zeros(w.shape());
                if (cfg_.kind == OptimKind::adam) s.v = Tensor::zeros(w.shape());
                s.init = true;
            }
            ++s.t;
            if (cfg_.kind == OptimKind::sgd_momentum) {
                for (std::size_t i = 0; i < w.size(); ++i) {
                    s.m.at(i) = cfg_.momentum * s.m.at(i) + grad.at(i);
                    w.at(i) -= lr * s.m.at(i);
                }
            } else {
                double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(s.t));
                double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(s.t));
                for (std::size_t i = 0; i < w.size(); ++i) {
                    double gv = grad.at(i);
                    s.m.at(i) = cfg_.beta1 * s.m.at(i) + (1.0 - cfg_.beta1) * gv;
                    s.v.at(i) = cfg_.beta2 * s.v.at(i) + (1.0 - cfg_.beta2) * gv * gv;
                    double mhat = s.m.at(i) / bc1;
                    double vhat = s.v.at(i) / bc2;
                    w.at(i) -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
                }
            }
            if (!w.all_finite())
                throw NumericsError("optimizer: non-finite parameter in group '" + g.name +
                                    "' after update");
        }
    }
    ++step_count_;
}

double clip_grad_norm(std::vector<ParameterGroup>& groups, double max_norm) {
    double sq = 0.0;
    for (auto& g : groups) {
        if (!g.trainable) continue;
        for (auto& p : g.tensors) {
            if (!p.has_grad()) continue;
            const Tensor& gr = p.grad();
            for (std::size_t i = 0; i < gr.size(); ++i) sq += gr.at(i) * gr.at(i);
        }
    }
    double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        double f = max_norm / norm;
        for (auto& g : groups) {
            if (!g.trainable) continue;
            for (auto& p : g.tensors) {
                if (!p.has_grad()) continue;
                Tensor& gr = p.node()->grad;
                for (std::size_t i = 0; i < gr.size(); ++i) gr.at(i) *= f;
            }
        }
    }
    return norm;
}

void zero_grads(std::vector<ParameterGroup>& groups) {
    for (auto& g : groups)
        for (auto& p : g.tensors) p.zero_grad();
}

}  // namespace absa
