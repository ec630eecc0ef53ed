#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "absa/autodiff.hpp"

namespace absa {

// Unit of freezing and of discriminative learning rates.
struct ParameterGroup {
    std::string name;
    std::vector<ad::Var> tensors;
    bool trainable = true;
    double lr_scale = 1.0;
};

enum class OptimKind { sgd_momentum, adam };

struct OptimizerConfig {
    OptimKind kind = OptimKind::adam;
    double momentum = 0.9;  // sgd_momentum only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Parameter updates with per-group effective learning rates. Auxiliary
// buffers are keyed by tensor identity, so a tensor keeps its momentum (or
// Adam moments) across freeze/thaw transitions within one optimizer's life.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg = {}) : cfg_(cfg) {}

    // lrs[i] is the effective learning rate for groups[i]; must be positive
    // for trainable groups. Non-trainable groups are left bit-identical.
    void step(std::vector<ParameterGroup>& groups, const std::vector<double>& lrs);

    std::uint64_t step_count() const { return step_count_; }
    const OptimizerConfig& config() const { return cfg_; }

private:
    struct Slot {
        Tensor m;  // momentum buffer / first moment
        Tensor v;  // second moment (adam)
        std::uint64_t t = 0;
        bool init = false;
    };
    OptimizerConfig cfg_;
    std::unordered_map<ad::Node*, Slot> state_;
    std::uint64_t step_count_ = 0;
};

// Global-norm gradient clip over all trainable tensors; returns the pre-clip
// norm. max_norm <= 0 disables clipping.
double clip_grad_norm(std::vector<ParameterGroup>& groups, double max_norm);

void zero_grads(std::vector<ParameterGroup>& groups);

}  // namespace absa
