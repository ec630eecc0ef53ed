#pragma once

#include <cstddef>
#include <vector>

namespace absa {

struct StlrParams {
    double cut_frac = 0.1;
    double ratio = 32.0;
    double lr_max = 0.004;
};

// Slanted triangular learning rate: linear warmup to lr_max at
// t = floor(T*cut_frac), then linear decay back to lr_max/ratio at t = T.
double stlr(std::size_t t, std::size_t total, double cut_frac, double ratio, double lr_max);
inline double stlr(std::size_t t, std::size_t total, const StlrParams& p) {
    return stlr(t, total, p.cut_frac, p.ratio, p.lr_max);
}

// Geometrically decaying learning rates from the top group down:
// the last (topmost) group gets base_lr, each group below gets previous/decay.
// Returned bottom-to-top, matching the group ordering.
std::vector<double> discriminative_lrs(double base_lr, std::size_t n_groups, double decay);

// Early-stopping rule: stop once the best validation loss has not improved
// by at least min_delta for `patience` consecutive evaluations.
class ConvergenceCheck {
public:
    ConvergenceCheck(std::size_t patience, double min_delta);
    // feed one validation loss; returns true when training should stop
    bool update(double validation_loss);
    double best() const { return best_; }

private:
    std::size_t patience_;
    double min_delta_;
    double best_;
    std::size_t bad_count_ = 0;
};

// convenience over a whole series: number of evaluations consumed before
// stopping (series.size() if the rule never fires)
std::size_t convergence_stop_index(const std::vector<double>& losses, std::size_t patience,
                                   double min_delta);

}  // namespace absa
