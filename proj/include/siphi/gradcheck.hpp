#pragma once

#include <functional>
#include <string>

#include "siphi/autodiff.hpp"
#include "siphi/params.hpp"

namespace siphi {

// Scalar function of named parameters, expressed on a graph.
using ScalarFn = std::function<ad::Var(ad::Graph&, const ad::VarMap&)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Compares reverse-mode gradients of fn at `point` with central differences
// (step eps) for every trainable coordinate. Relative error per coordinate is
// |a - n| / max(|a|, |n|, floor * max(1, |f(point)|)). The floor keeps exactly
// zero gradients (e.g. attention key biases) from comparing against rounding noise.
GradCheckResult grad_check(const ScalarFn& fn, const ParamSet& point, double eps = 1e-5, double floor = 1e-6);

}  // namespace siphi
