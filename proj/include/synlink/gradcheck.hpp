#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "synlink/model.hpp"

namespace synlink {

struct GradCheckConfig {
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::size_t coordinates = 20;
    double step = 1e-5;        // central-difference h
    double tolerance = 1e-4;   // on |analytic − numeric| / max(1, |analytic|)
    int hidden_dim = 8;
    double init_range = 0.5;   // wider than training init to exercise the nonlinearities
};

struct CoordinateCheck {
    std::string array;
    std::size_t offset = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckResult {
    std::string loss;
    std::uint64_t seed = 0;
    std::vector<CoordinateCheck> coords;
    double max_rel_error = 0.0;
    bool passed = false;
};

/// Loss evaluated at `params`; when `grad` is non-null it accumulates the
/// analytic gradient.
using LossFunction = std::function<double(const Parameters& params, Parameters* grad)>;

/// Compares the analytic gradient against central finite differences at
/// `coordinates` random entries (array chosen uniformly, then an entry).
GradCheckResult check_gradient(const std::string& name, const LossFunction& loss,
                               const Parameters& at, std::uint64_t seed, const GradCheckConfig& cfg);

/// The full suite: label-smoothed cross-entropy and the four preference
/// objectives, at every configured seed.
std::vector<GradCheckResult> run_gradcheck_suite(const GradCheckConfig& cfg);

}  // namespace synlink
