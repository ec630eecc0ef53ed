#include "absa/curve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <iostream>
#include <mutex>

#include "absa/errors.hpp"
#include "absa/rng.hpp"

namespace absa {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void append_metric_rows(std::string& csv, const CurveCell& cell) {
    auto row = [&](const char* name, double value) {
        csv += fmt_double(cell.fraction);
        csv += ',';
        csv += std::to_string(cell.seed);
        csv += ',';
        csv += name;
        csv += ',';
        csv += fmt_double(value);
        csv += '\n';
    };
    if (cell.metrics.task == TaskKind::classify) {
        row("error_rate", cell.metrics.error_rate);
        row("f1_macro", cell.metrics.f1_macro);
        row("f1_micro", cell.metrics.f1_micro);
    } else {
        row("mse", cell.metrics.mse);
        row("r2", cell.metrics.r2);
    }
}

}  // namespace

std::string CurveTable::to_csv() const {
    std::string csv = "fraction,seed,metric,value\n";
    for (const auto& cell : rows) append_metric_rows(csv, cell);
    return csv;
}

nlohmann::json CurveTable::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& cell : rows)
        arr.push_back({{"fraction", cell.fraction},
                       {"seed", cell.seed},
                       {"metrics", cell.metrics.to_json()}});
    return arr;
}

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ConfigError("subsample: fraction must lie in (0,1], got " + std::to_string(fraction));
    std::size_t k = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(n)));
    k = std::min(k, n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (k < n) {
        Rng rng = Rng(seed).fork("subsample");
        rng.shuffle(order);
        order.resize(k);
    }
    std::sort(order.begin(), order.end());
    return order;
}

CurveTable subsample_curve(const std::vector<LabeledExample>& train,
                           const std::vector<double>& fractions,
                           const std::vector<std::uint64_t>& seeds, std::size_t n_classes,
                           const CurveRunner& runner, std::size_t jobs) {
    struct Cell {
        double fraction;
        std::uint64_t seed;
        bool skipped = false;
        MetricsRecord metrics;
    };
    std::vector<Cell> cells;
    for (double f : fractions)
        for (std::uint64_t s : seeds) cells.push_back({f, s, false, {}});

    auto run_cell = [&](Cell& cell) {
        std::vector<std::size_t> idx = subsample_indices(train.size(), cell.fraction, cell.seed);
        if (idx.size() < 2 * n_classes) {
            std::cerr << "warning: skipping fraction " << cell.fraction << " seed " << cell.seed
                      << ": " << idx.size() << " examples < " << 2 * n_classes << "\n";
            cell.skipped = true;
            return;
        }
        std::vector<LabeledExample> subset;
        subset.reserve(idx.size());
        for (std::size_t i : idx) subset.push_back(train[i]);
        cell.metrics = runner(subset, cell.seed);
    };

    if (jobs <= 1) {
        for (auto& cell : cells) run_cell(cell);
    } else {
        std::size_t next = 0;
        std::mutex mu;
        auto worker = [&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= cells.size()) return;
                    i = next++;
                }
                run_cell(cells[i]);
            }
        };
        std::vector<std::future<void>> pool;
        for (std::size_t j = 0; j < std::min(jobs, cells.size()); ++j)
            pool.push_back(std::async(std::launch::async, worker));
        for (auto& f : pool) f.get();
    }

    CurveTable table;
    for (const auto& cell : cells)
        if (!cell.skipped) table.rows.push_back({cell.fraction, cell.seed, cell.metrics});
    return table;
}

}  // namespace absa
