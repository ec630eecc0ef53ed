#include "absa/schedule.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "absa/errors.hpp"

namespace absa {

double stlr(std::size_t t, std::size_t total, double cut_frac, double ratio, double lr_max) {
    if (!(cut_frac > 0.0 && cut_frac < 1.0))
        throw ConfigError("stlr: cut_frac must lie in (0,1), got " + std::to_string(cut_frac));
    if (!(ratio > 1.0)) throw ConfigError("stlr: ratio must exceed 1, got " + std::to_string(ratio));
    if (!(lr_max > 0.0)) throw ConfigError("stlr: lr_max must be positive");
    if (total == 0 || t > total)
        throw ConfigError("stlr: step " + std::to_string(t) + " outside schedule of " +
                          std::to_string(total) + " steps");
    std::size_t cut = static_cast<std::size_t>(
        std::floor(static_cast<double>(total) * cut_frac));
    if (cut == 0) cut = 1;  // degenerate warmup still peaks once
    double p;
    if (t < cut) {
        p = static_cast<double>(t) / static_cast<double>(cut);
    } else {
        p = 1.0 - static_cast<double>(t - cut) /
                      (static_cast<double>(cut) * (1.0 / cut_frac - 1.0));
    }
    return lr_max * (1.0 + p * (ratio - 1.0)) / ratio;
}

std::vector<double> discriminative_lrs(double base_lr, std::size_t n_groups, double decay) {
    if (n_groups == 0) throw ConfigError("discriminative_lrs: no groups");
    if (!(decay > 1.0))
        throw ConfigError("discriminative_lrs: decay must exceed 1, got " + std::to_string(decay));
    std::vector<double> lrs(n_groups);
    double lr = base_lr;
    for (std::size_t i = n_groups; i-- > 0;) {
        lrs[i] = lr;
        lr /= decay;
    }
    return lrs;
}

ConvergenceCheck::ConvergenceCheck(std::size_t patience, double min_delta)
    : patience_(patience), min_delta_(min_delta),
      best_(std::numeric_limits<double>::infinity()) {
    if (patience_ < 1) throw ConfigError("convergence: patience must be at least 1");
}

bool ConvergenceCheck::update(double validation_loss) {
    if (validation_loss < best_ - min_delta_) {
        best_ = validation_loss;
        bad_count_ = 0;
    } else {
        best_ = std::min(best_, validation_loss);
        ++bad_count_;
    }
    return bad_count_ >= patience_;
}

std::size_t convergence_stop_index(const std::vector<double>& losses, std::size_t patience,
                                   double min_delta) {
    ConvergenceCheck check(patience, min_delta);
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (check.update(losses[i])) return i + 1;
    return losses.size();
}

}  // namespace absa
