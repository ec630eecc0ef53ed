#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace absa::diag {

struct GradCheckReport {
    std::string op;
    double max_rel_err = 0.0;
};

// Finite-difference check of every differentiable primitive, repeated over
// n_seeds random input draws. Returns the worst relative error per op.
std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t base_seed, int n_seeds, double eps);

// Finite-difference check of the full stacked weight-dropped LSTM encoder
// (vocab 20, embed 8, hidden 12, 2 layers): a scalar probe of every step's
// output and the final state, from a random initial state. The probe layout
// keeps every parameter on a strong gradient path, which keeps true
// gradients well above the eps-induced noise floor of central differences.
double encoder_gradcheck(std::uint64_t seed, double eps);

}  // namespace absa::diag
