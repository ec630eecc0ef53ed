#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "absa/tensor.hpp"

namespace absa::ad {

// One node of a reverse-mode differentiation graph. Graphs are built per
// training step (define-by-run) and freed when the step's Vars go out of
// scope. Leaves (parameters, constants) persist across steps.
struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation; same shape as value
    bool has_grad = false;
    bool requires_grad = false;
    std::string op;  // empty for leaves
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents
    bool backward_done = false;
};

// Lightweight handle to a graph node. Copy freely; copies alias.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    bool valid() const { return node_ != nullptr; }
    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }  // optimizer in-place update
    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool has_grad() const { return node_ && node_->has_grad; }
    const Tensor& grad() const { return node_->grad; }
    void zero_grad();  // zeroes (and allocates) the gradient buffer

    const Shape& shape() const { return node_->value.shape(); }
    std::size_t rows() const { return node_->value.rows(); }
    std::size_t cols() const { return node_->value.cols(); }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

Var leaf(Tensor value, bool requires_grad);
Var constant(Tensor value);

// Generic node constructor; also the hook test fixtures use to build ops
// with deliberately wrong gradients. Output values are checked finite.
Var make_op(std::string op, std::vector<Var> parents, Tensor value,
            std::function<void(Node&)> backprop);

// Accumulates g into a parent node's gradient buffer (no-op when the parent
// does not require gradients).
void accumulate_grad(const std::shared_ptr<Node>& n, const Tensor& g);

// --- primitive ops ---------------------------------------------------------

Var add(const Var& a, const Var& b);  // same shape, or [N,M] + row vector bias
Var sub(const Var& a, const Var& b);  // same shape
Var mul(const Var& a, const Var& b);  // elementwise, same shape
Var scale(const Var& a, double c);
Var matmul(const Var& a, const Var& b);     // [N,K]·[K,M]
Var matmul_nt(const Var& a, const Var& b);  // [N,K]·[M,K]ᵀ — tied decoders
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var softmax(const Var& a);  // row-wise
Var sum(const Var& a);      // -> scalar
Var mean(const Var& a);     // -> scalar
Var row(const Var& a, std::size_t r);                          // [N,M] -> [M]
Var slice_cols(const Var& a, std::size_t c0, std::size_t c1);  // half-open
Var concat_cols(const std::vector<Var>& parts);
Var embedding_lookup(const Var& table, const std::vector<int>& ids);

// mean cross-entropy of row-wise softmax against integer targets -> scalar
Var softmax_cross_entropy(const Var& logits, const std::vector<int>& targets);
// mean squared error -> scalar
Var mse(const Var& pred, const Var& target);

// multiplication by an explicitly sampled mask; the mask must not require
// gradients, which keeps every forward reproducible and checkable
Var dropout(const Var& x, const Var& mask);

// Poolers over a [T,H] matrix of per-step states. Rows are laid out so that
// the sequence ends at row T-1 (left-padded batches); the valid window is the
// trailing `length` rows.
Var max_over_time(const Var& hs, std::size_t length);
Var mean_over_time(const Var& hs, std::size_t length);
// [h_last ; max over valid ; mean over valid] -> [3H]
Var concat_pool(const Var& hs, std::size_t length);
// Batched variant over per-step [B,H] states; lengths are per example.
Var concat_pool_steps(const std::vector<Var>& steps, const std::vector<std::size_t>& lengths);

// --- backward & checking ---------------------------------------------------

// Populates gradients of every requires_grad node reachable from `loss`.
// loss must be scalar; running backward twice on one graph is an error.
void backward(const Var& loss);

using ScalarFn = std::function<Var(const std::vector<Var>&)>;

// Central-difference check of backward() for a scalar-valued expression.
// Returns max over input coordinates of |analytic-numeric| / max(|analytic|,
// |numeric|, 1e-12). fn must be deterministic (explicit dropout masks only).
double gradient_check(const ScalarFn& fn, const std::vector<Tensor>& inputs, double eps);

}  // namespace absa::ad
