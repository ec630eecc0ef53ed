#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace absa {

enum class TaskKind { classify, regress };

TaskKind task_kind_from_string(const std::string& s);
std::string to_string(TaskKind t);

struct MetricsRecord {
    TaskKind task = TaskKind::classify;
    std::size_t n_examples = 0;

    // classification
    double error_rate = 0.0;
    double f1_macro = 0.0;
    double f1_micro = 0.0;
    std::vector<double> per_class_f1;

    // regression
    double mse = 0.0;
    double r2 = 0.0;

    nlohmann::json to_json() const;
};

// error_rate = misclassified/n; per-class F1 = 2PR/(P+R) with 0 when P+R=0;
// macro averages classes present in the truths; micro pools counts (equal to
// accuracy for single-label multiclass).
MetricsRecord compute_classification_metrics(const std::vector<int>& predictions,
                                             const std::vector<int>& truths,
                                             std::size_t n_classes);

// mse = mean squared residual; r2 = 1 - SS_res/SS_tot, with r2 = 0 when both
// sums are zero and -inf when only SS_tot is.
MetricsRecord compute_regression_metrics(const std::vector<double>& predictions,
                                         const std::vector<double>& truths);

}  // namespace absa
