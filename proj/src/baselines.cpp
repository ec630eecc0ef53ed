#include "absa/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

#include "absa/errors.hpp"
#include "absa/hash.hpp"

namespace absa {

SparseVector bow_featurize(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    std::map<int, double> counts;
    for (const auto& t : tokens) ++counts[vocab.id(t)];
    SparseVector v;
    v.dim = vocab.size();
    v.entries.assign(counts.begin(), counts.end());
    return v;
}

std::vector<double> LinearModel::scores(const SparseVector& x) const {
    std::vector<double> out(bias);
    for (std::size_t k = 0; k < n_outputs; ++k) {
        const double* w = weights.data() + k * dim;
        for (const auto& [i, c] : x.entries) out[k] += w[i] * c;
    }
    return out;
}

std::vector<double> LinearModel::scores_dense(const std::vector<double>& x) const {
    std::vector<double> out(bias);
    for (std::size_t k = 0; k < n_outputs; ++k) {
        const double* w = weights.data() + k * dim;
        for (std::size_t i = 0; i < dim; ++i) out[k] += w[i] * x[i];
    }
    return out;
}

int LinearModel::predict_class(const SparseVector& x) const {
    std::vector<double> s = scores(x);
    return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
}

double LinearModel::predict_value(const SparseVector& x) const { return scores(x)[0]; }

namespace {

// feature access shared by the sparse and dense trainers
struct Features {
    std::size_t n = 0, dim = 0;
    const std::vector<SparseVector>* sparse = nullptr;
    const std::vector<std::vector<double>>* dense = nullptr;

    double dot(std::size_t i, const double* w) const {
        double s = 0.0;
        if (sparse) {
            for (const auto& [j, c] : (*sparse)[i].entries) s += w[j] * c;
        } else {
            const auto& x = (*dense)[i];
            for (std::size_t j = 0; j < dim; ++j) s += w[j] * x[j];
        }
        return s;
    }
    void axpy(std::size_t i, double coef, double* out) const {
        if (sparse) {
            for (const auto& [j, c] : (*sparse)[i].entries) out[j] += coef * c;
        } else {
            const auto& x = (*dense)[i];
            for (std::size_t j = 0; j < dim; ++j) out[j] += coef * x[j];
        }
    }
};

Features sparse_features(const std::vector<SparseVector>& f) {
    Features out;
    out.n = f.size();
    out.dim = f.empty() ? 0 : f[0].dim;
    for (const auto& v : f)
        if (v.dim != out.dim) throw ShapeError("linear baseline: inconsistent feature dims");
    out.sparse = &f;
    return out;
}

Features dense_features(const std::vector<std::vector<double>>& f) {
    Features out;
    out.n = f.size();
    out.dim = f.empty() ? 0 : f[0].size();
    for (const auto& v : f)
        if (v.size() != out.dim) throw ShapeError("linear baseline: inconsistent feature dims");
    out.dense = &f;
    return out;
}

struct Objective {
    // returns J(params); fills grad when non-null. params = [weights | bias]
    virtual double eval(const std::vector<double>& params, std::vector<double>* grad) const = 0;
    virtual ~Objective() = default;
};

struct LogisticObjective : Objective {
    const Features& f;
    const std::vector<int>& labels;
    std::size_t k;
    double l2;

    LogisticObjective(const Features& f, const std::vector<int>& labels, std::size_t k, double l2)
        : f(f), labels(labels), k(k), l2(l2) {}

    double eval(const std::vector<double>& params, std::vector<double>* grad) const override {
        std::size_t wlen = k * f.dim;
        if (grad) std::fill(grad->begin(), grad->end(), 0.0);
        double loss = 0.0;
        std::vector<double> s(k);
        for (std::size_t i = 0; i < f.n; ++i) {
            for (std::size_t c = 0; c < k; ++c)
                s[c] = f.dot(i, params.data() + c * f.dim) + params[wlen + c];
            double m = *std::max_element(s.begin(), s.end());
            double z = 0.0;
            for (double& v : s) {
                v = std::exp(v - m);
                z += v;
            }
            std::size_t y = static_cast<std::size_t>(labels[i]);
            loss -= std::log(s[y] / z);
            if (grad) {
                for (std::size_t c = 0; c < k; ++c) {
                    double p = s[c] / z - (c == y ? 1.0 : 0.0);
                    double coef = p / static_cast<double>(f.n);
                    f.axpy(i, coef, grad->data() + c * f.dim);
                    (*grad)[wlen + c] += coef;
                }
            }
        }
        loss /= static_cast<double>(f.n);
        for (std::size_t j = 0; j < wlen; ++j) {
            loss += l2 * params[j] * params[j];
            if (grad) (*grad)[j] += 2.0 * l2 * params[j];
        }
        return loss;
    }
};

struct LeastSquaresObjective : Objective {
    const Features& f;
    const std::vector<double>& targets;
    double l2;

    LeastSquaresObjective(const Features& f, const std::vector<double>& targets, double l2)
        : f(f), targets(targets), l2(l2) {}

    double eval(const std::vector<double>& params, std::vector<double>* grad) const override {
        std::size_t wlen = f.dim;
        if (grad) std::fill(grad->begin(), grad->end(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < f.n; ++i) {
            double r = f.dot(i, params.data()) + params[wlen] - targets[i];
            loss += r * r;
            if (grad) {
                double coef = 2.0 * r / static_cast<double>(f.n);
                f.axpy(i, coef, grad->data());
                (*grad)[wlen] += coef;
            }
        }
        loss /= static_cast<double>(f.n);
        for (std::size_t j = 0; j < wlen; ++j) {
            loss += l2 * params[j] * params[j];
            if (grad) (*grad)[j] += 2.0 * l2 * params[j];
        }
        return loss;
    }
};

// full-batch gradient descent with backtracking line search
void minimize(const Objective& obj, std::vector<double>& params, const LinearFitOptions& opts) {
    std::vector<double> grad(params.size());
    double step = 1.0;
    double j0 = obj.eval(params, &grad);
    for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
        double gnorm2 = 0.0;
        for (double g : grad) gnorm2 += g * g;
        if (std::sqrt(gnorm2) < opts.grad_tol) break;

        std::vector<double> trial(params.size());
        double j1 = j0;
        bool moved = false;
        while (step > 1e-14) {
            for (std::size_t j = 0; j < params.size(); ++j)
                trial[j] = params[j] - step * grad[j];
            j1 = obj.eval(trial, nullptr);
            if (j1 <= j0 - 1e-4 * step * gnorm2) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
        params.swap(trial);
        j0 = obj.eval(params, &grad);
        step = std::min(step * 2.0, 1e6);
    }
}

}  // namespace

static LinearModel fit_classifier(const Features& f, const std::vector<int>& labels,
                                  std::size_t n_classes, const LinearFitOptions& opts) {
    if (f.n == 0 || labels.size() != f.n)
        throw ValidationError("linear baseline: features/labels mismatch");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
            throw ValidationError("linear baseline: label " + std::to_string(y) + " outside [0," +
                                  std::to_string(n_classes) + ")");
    LinearModel m;
    m.task = TaskKind::classify;
    m.dim = f.dim;
    m.n_outputs = n_classes;
    m.weights.assign(n_classes * f.dim, 0.0);
    m.bias.assign(n_classes, 0.0);

    bool degenerate = std::all_of(labels.begin(), labels.end(),
                                  [&](int y) { return y == labels[0]; });
    if (degenerate) {
        std::cerr << "warning: all training labels identical; emitting a constant predictor\n";
        m.bias[static_cast<std::size_t>(labels[0])] = 1.0;
        return m;
    }

    std::vector<double> params(n_classes * f.dim + n_classes, 0.0);
    LogisticObjective obj(f, labels, n_classes, opts.l2);
    minimize(obj, params, opts);
    std::copy_n(params.data(), m.weights.size(), m.weights.data());
    std::copy_n(params.data() + m.weights.size(), n_classes, m.bias.data());
    return m;
}

static LinearModel fit_regressor(const Features& f, const std::vector<double>& targets,
                                 const LinearFitOptions& opts) {
    if (f.n == 0 || targets.size() != f.n)
        throw ValidationError("linear baseline: features/targets mismatch");
    LinearModel m;
    m.task = TaskKind::regress;
    m.dim = f.dim;
    m.n_outputs = 1;
    std::vector<double> params(f.dim + 1, 0.0);
    LeastSquaresObjective obj(f, targets, opts.l2);
    minimize(obj, params, opts);
    m.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(f.dim));
    m.bias.assign(1, params[f.dim]);
    return m;
}

LinearModel train_linear_baseline(const std::vector<SparseVector>& features,
                                  const std::vector<int>& labels, std::size_t n_classes,
                                  const LinearFitOptions& opts) {
    Features f = sparse_features(features);
    return fit_classifier(f, labels, n_classes, opts);
}

LinearModel train_linear_baseline(const std::vector<SparseVector>& features,
                                  const std::vector<double>& targets,
                                  const LinearFitOptions& opts) {
    Features f = sparse_features(features);
    return fit_regressor(f, targets, opts);
}

LinearModel train_linear_dense(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& labels, std::size_t n_classes,
                               const LinearFitOptions& opts) {
    Features f = dense_features(features);
    return fit_classifier(f, labels, n_classes, opts);
}

LinearModel train_linear_dense(const std::vector<std::vector<double>>& features,
                               const std::vector<double>& targets, const LinearFitOptions& opts) {
    Features f = dense_features(features);
    return fit_regressor(f, targets, opts);
}

std::vector<double> meanpool_feature(const Tensor& table, const std::vector<int>& ids) {
    if (ids.empty()) throw ValidationError("meanpool: empty token sequence");
    if (table.rank() != 2) throw ShapeError("meanpool: embedding table must be rank 2");
    std::size_t d = table.cols();
    std::vector<double> out(d, 0.0);
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= table.rows())
            throw ValidationError("meanpool: id " + std::to_string(id) + " out of range");
        for (std::size_t j = 0; j < d; ++j) out[j] += table.at(static_cast<std::size_t>(id), j);
    }
    for (double& v : out) v /= static_cast<double>(ids.size());
    return out;
}

std::uint64_t table_checksum(const Tensor& table) {
    return fnv1a(table.data(), table.size() * sizeof(double));
}

std::vector<double> MeanPoolModel::scores(const Tensor& table, const std::vector<int>& ids) const {
    return dense.scores_dense(meanpool_feature(table, ids));
}

static std::vector<std::vector<double>> pool_all(const Tensor& table,
                                                 const std::vector<std::vector<int>>& sequences) {
    std::vector<std::vector<double>> out;
    out.reserve(sequences.size());
    for (const auto& ids : sequences) out.push_back(meanpool_feature(table, ids));
    return out;
}

MeanPoolModel train_meanpool_baseline(const Tensor& table,
                                      const std::vector<std::vector<int>>& sequences,
                                      const std::vector<int>& labels, std::size_t n_classes,
                                      const LinearFitOptions& opts) {
    MeanPoolModel m;
    m.table_checksum = table_checksum(table);
    m.dense = train_linear_dense(pool_all(table, sequences), labels, n_classes, opts);
    return m;
}

MeanPoolModel train_meanpool_baseline(const Tensor& table,
                                      const std::vector<std::vector<int>>& sequences,
                                      const std::vector<double>& targets,
                                      const LinearFitOptions& opts) {
    MeanPoolModel m;
    m.table_checksum = table_checksum(table);
    m.dense = train_linear_dense(pool_all(table, sequences), targets, opts);
    return m;
}

}  // namespace absa
