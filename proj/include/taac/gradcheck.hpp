#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "taac/nn.hpp"

namespace taac::gradcheck {

// Central finite differences in double precision against analytic
// gradients. relative error = |a - n| / max(1e-8, |a| + |n|).

struct CheckResult {
    std::string name;
    double max_rel_err = 0;
    double threshold = 1e-4;
    std::size_t points = 0;
    bool pass = false;
};

// compute(true): zero grads, run forward + backward, return the loss (the
// gradients land in the registered parameters). compute(false): loss only.
// Stochastic layers must be driven by a fixed context so repeated calls see
// identical masks and batch statistics.
using ComputeFn = std::function<double(bool with_grads)>;

double max_rel_err_over_points(const nn::ParamRefs<double>& params, const ComputeFn& compute,
                               std::size_t points, Rng& rng);

// The full battery: every layer with a paired gradient, both decomposition
// losses, and end-to-end compositions up to the complete phase-I
// classification path. Linear maps get a tighter threshold (finite
// differences are exact on them up to rounding).
std::vector<CheckResult> run_suite(std::uint64_t seed, std::size_t points = 10);

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace taac::gradcheck
