#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "absa/metrics.hpp"
#include "absa/tensor.hpp"
#include "absa/vocab.hpp"

namespace absa {

// Sparse bag-of-words features over vocabulary ids.
struct SparseVector {
    std::vector<std::pair<int, double>> entries;  // strictly increasing indices, positive counts
    std::size_t dim = 0;

    double total() const {
        double s = 0.0;
        for (const auto& [i, c] : entries) s += c;
        return s;
    }
};

// Token counts over the vocabulary; OOV tokens count toward <unk>.
SparseVector bow_featurize(const std::vector<std::string>& tokens, const Vocabulary& vocab);

// Multinomial logistic regression / least-squares linear regression over
// sparse or dense features, fit by full-batch gradient descent with
// backtracking line search and an L2 penalty on the weights (not biases).
struct LinearModel {
    TaskKind task = TaskKind::classify;
    std::size_t dim = 0;
    std::size_t n_outputs = 1;          // classes, or 1 for regression
    std::vector<double> weights;        // [n_outputs, dim] row-major
    std::vector<double> bias;           // [n_outputs]

    std::vector<double> scores(const SparseVector& x) const;
    std::vector<double> scores_dense(const std::vector<double>& x) const;
    int predict_class(const SparseVector& x) const;
    double predict_value(const SparseVector& x) const;
};

struct LinearFitOptions {
    double l2 = 0.0;
    double grad_tol = 1e-8;
    std::size_t max_iters = 10000;
};

LinearModel train_linear_baseline(const std::vector<SparseVector>& features,
                                  const std::vector<int>& labels, std::size_t n_classes,
                                  const LinearFitOptions& opts);
LinearModel train_linear_baseline(const std::vector<SparseVector>& features,
                                  const std::vector<double>& targets,
                                  const LinearFitOptions& opts);

// dense-feature variants (used by the mean-pool baseline)
LinearModel train_linear_dense(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& labels, std::size_t n_classes,
                               const LinearFitOptions& opts);
LinearModel train_linear_dense(const std::vector<std::vector<double>>& features,
                               const std::vector<double>& targets, const LinearFitOptions& opts);

// --- mean-pool baseline ------------------------------------------------------

// mean of embedding rows over a token id sequence; empty sequences are an error
std::vector<double> meanpool_feature(const Tensor& table, const std::vector<int>& ids);

// Fixed (frozen) embedding table feeding one trained dense layer. Only the
// dense layer's parameters change during training.
struct MeanPoolModel {
    std::uint64_t table_checksum = 0;  // recorded at training time
    LinearModel dense;

    std::vector<double> scores(const Tensor& table, const std::vector<int>& ids) const;
};

MeanPoolModel train_meanpool_baseline(const Tensor& table,
                                      const std::vector<std::vector<int>>& sequences,
                                      const std::vector<int>& labels, std::size_t n_classes,
                                      const LinearFitOptions& opts);
MeanPoolModel train_meanpool_baseline(const Tensor& table,
                                      const std::vector<std::vector<int>>& sequences,
                                      const std::vector<double>& targets,
                                      const LinearFitOptions& opts);

std::uint64_t table_checksum(const Tensor& table);

}  // namespace absa
