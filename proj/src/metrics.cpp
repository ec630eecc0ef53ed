#include "absa/metrics.hpp"

#include <limits>

#include "absa/errors.hpp"

namespace absa {

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "classify") return TaskKind::classify;
    if (s == "regress") return TaskKind::regress;
    throw ConfigError("unknown task '" + s + "' (expected classify or regress)");
}

std::string to_string(TaskKind t) { return t == TaskKind::classify ? "classify" : "regress"; }

nlohmann::json MetricsRecord::to_json() const {
    nlohmann::json j;
    j["task"] = to_string(task);
    j["n_examples"] = n_examples;
    if (task == TaskKind::classify) {
        j["error_rate"] = error_rate;
        j["f1_macro"] = f1_macro;
        j["f1_micro"] = f1_micro;
        j["per_class_f1"] = per_class_f1;
    } else {
        j["mse"] = mse;
        j["r2"] = r2;
    }
    return j;
}

MetricsRecord compute_classification_metrics(const std::vector<int>& predictions,
                                             const std::vector<int>& truths,
                                             std::size_t n_classes) {
    if (predictions.size() != truths.size())
        throw ValidationError("metrics: " + std::to_string(predictions.size()) +
                              " predictions for " + std::to_string(truths.size()) + " truths");
    if (truths.empty()) throw ValidationError("metrics: empty input");
    for (std::size_t i = 0; i < truths.size(); ++i) {
        for (int v : {predictions[i], truths[i]})
            if (v < 0 || static_cast<std::size_t>(v) >= n_classes)
                throw ValidationError("metrics: label " + std::to_string(v) +
                                      " outside [0," + std::to_string(n_classes) + ")", i);
    }

    std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0),
        truth_count(n_classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        std::size_t t = static_cast<std::size_t>(truths[i]);
        std::size_t p = static_cast<std::size_t>(predictions[i]);
        ++truth_count[t];
        if (p == t) {
            ++tp[t];
            ++correct;
        } else {
            ++fp[p];
            ++fn[t];
        }
    }

    MetricsRecord m;
    m.task = TaskKind::classify;
    m.n_examples = truths.size();
    m.error_rate = static_cast<double>(truths.size() - correct) /
                   static_cast<double>(truths.size());

    double macro_sum = 0.0;
    std::size_t present = 0;
    m.per_class_f1.resize(n_classes, 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
        double precision =
            tp[c] + fp[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]);
        double recall =
            tp[c] + fn[c] == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fn[c]);
        double f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        m.per_class_f1[c] = f1;
        if (truth_count[c] > 0) {
            macro_sum += f1;
            ++present;
        }
    }
    m.f1_macro = present ? macro_sum / static_cast<double>(present) : 0.0;

    std::size_t tp_all = correct;
    std::size_t fp_all = truths.size() - correct;
    std::size_t fn_all = truths.size() - correct;
    double micro_p = static_cast<double>(tp_all) / static_cast<double>(tp_all + fp_all);
    double micro_r = static_cast<double>(tp_all) / static_cast<double>(tp_all + fn_all);
    m.f1_micro = micro_p + micro_r == 0.0 ? 0.0 : 2.0 * micro_p * micro_r / (micro_p + micro_r);
    return m;
}

MetricsRecord compute_regression_metrics(const std::vector<double>& predictions,
                                         const std::vector<double>& truths) {
    if (predictions.size() != truths.size())
        throw ValidationError("metrics: " + std::to_string(predictions.size()) +
                              " predictions for " + std::to_string(truths.size()) + " truths");
    if (truths.empty()) throw ValidationError("metrics: empty input");

    double n = static_cast<double>(truths.size());
    double ss_res = 0.0, mean = 0.0;
    for (double t : truths) mean += t;
    mean /= n;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        double r = predictions[i] - truths[i];
        ss_res += r * r;
        double d = truths[i] - mean;
        ss_tot += d * d;
    }

    MetricsRecord m;
    m.task = TaskKind::regress;
    m.n_examples = truths.size();
    m.mse = ss_res / n;
    if (ss_tot == 0.0)
        m.r2 = ss_res == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    else
        m.r2 = 1.0 - ss_res / ss_tot;
    return m;
}

}  // namespace absa
