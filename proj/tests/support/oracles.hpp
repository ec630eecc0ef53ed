#pragma once

// Independent brute-force oracles for metric and regression checks. These
// deliberately re-derive everything from first principles (confusion matrix
// per class, residual sums, normal equations) without touching the library's
// computation paths.

#include <cstddef>
#include <vector>

namespace oracle {

struct ClassMetrics {
    double error_rate;
    double f1_macro;
    double f1_micro;
    std::vector<double> per_class_f1;
};

inline ClassMetrics brute_force_classification(const std::vector<int>& preds,
                                               const std::vector<int>& truths,
                                               std::size_t n_classes) {
    ClassMetrics m{};
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truths.size(); ++i)
        if (preds[i] != truths[i]) ++wrong;
    m.error_rate = double(wrong) / double(truths.size());

    double macro = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0, truth_n = 0;
        for (std::size_t i = 0; i < truths.size(); ++i) {
            bool t = truths[i] == int(c), p = preds[i] == int(c);
            if (t) ++truth_n;
            if (t && p) ++tp;
            if (!t && p) ++fp;
            if (t && !p) ++fn;
        }
        double prec = tp + fp ? double(tp) / double(tp + fp) : 0.0;
        double rec = tp + fn ? double(tp) / double(tp + fn) : 0.0;
        double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        m.per_class_f1.push_back(f1);
        if (truth_n) {
            macro += f1;
            ++present;
        }
    }
    m.f1_macro = present ? macro / double(present) : 0.0;

    std::size_t tp_all = truths.size() - wrong;
    double p = double(tp_all) / double(truths.size());
    m.f1_micro = p > 0.0 ? 2.0 * p * p / (p + p) : 0.0;  // micro P == micro R
    return m;
}

struct RegMetrics {
    double mse;
    double r2;
    bool r2_defined;
};

inline RegMetrics brute_force_regression(const std::vector<double>& preds,
                                         const std::vector<double>& truths) {
    RegMetrics m{};
    double n = double(truths.size());
    double mean = 0.0;
    for (double t : truths) mean += t;
    mean /= n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        ss_res += (preds[i] - truths[i]) * (preds[i] - truths[i]);
        ss_tot += (truths[i] - mean) * (truths[i] - mean);
    }
    m.mse = ss_res / n;
    if (ss_tot == 0.0) {
        m.r2_defined = ss_res == 0.0;
        m.r2 = 0.0;
    } else {
        m.r2_defined = true;
        m.r2 = 1.0 - ss_res / ss_tot;
    }
    return m;
}

// least squares with intercept via normal equations (Gaussian elimination)
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& x,
                                            const std::vector<double>& y) {
    std::size_t n = x.size(), d = x[0].size() + 1;  // + intercept
    std::vector<std::vector<double>> a(d, std::vector<double>(d + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row = x[i];
        row.push_back(1.0);
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = 0; q < d; ++q) a[p][q] += row[p] * row[q];
            a[p][d] += row[p] * y[i];
        }
    }
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < d; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col || a[col][col] == 0.0) continue;
            double f = a[r][col] / a[col][col];
            for (std::size_t q = col; q <= d; ++q) a[r][q] -= f * a[col][q];
        }
    }
    std::vector<double> out(d);
    for (std::size_t p = 0; p < d; ++p) out[p] = a[p][d] / a[p][p];
    return out;  // [weights..., intercept]
}

}  // namespace oracle
