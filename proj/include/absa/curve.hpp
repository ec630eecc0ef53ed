#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "absa/data.hpp"
#include "absa/metrics.hpp"

namespace absa {

struct CurveCell {
    double fraction = 0.0;
    std::uint64_t seed = 0;
    MetricsRecord metrics;
};

struct CurveTable {
    std::vector<CurveCell> rows;

    // columns: fraction, seed, metric, value — one line per metric
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

// Deterministic subsample of k = round(fraction*n) indices, sorted
// ascending. fraction 1.0 returns every index regardless of seed.
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed);

using CurveRunner =
    std::function<MetricsRecord(const std::vector<LabeledExample>& train_subset,
                                std::uint64_t seed)>;

// Runs the stage template on random training subsamples for every
// (fraction, seed) pair. The caller's runner evaluates on a fixed held-out
// set that is never subsampled. Pairs whose subsample would hold fewer than
// 2*n_classes examples are skipped with a warning. jobs > 1 runs cells on a
// thread pool; row order and bytes are identical either way.
CurveTable subsample_curve(const std::vector<LabeledExample>& train,
                           const std::vector<double>& fractions,
                           const std::vector<std::uint64_t>& seeds, std::size_t n_classes,
                           const CurveRunner& runner, std::size_t jobs = 1);

}  // namespace absa
