#include "siphi/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "siphi/errors.hpp"

namespace siphi {

namespace {

// Parameters become the first nodes of every probe graph, always in the same
// order, so one VarMap serves all evaluations.
double evaluate(const ScalarFn& fn, const ParamSet& point, const ad::VarMap& vars) {
    ad::Graph g;
    for (const auto& [name, p] : point.entries()) g.constant(p.value);
    const double v = g.value(fn(g, vars)).item();
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
    return v;
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& fn, const ParamSet& point, double eps, double floor) {
    ad::Graph g;
    const auto vars = point.bind(g);
    const auto out = fn(g, vars);
    const double f0 = g.value(out).item();
    if (!std::isfinite(f0)) throw NumericError("grad_check: non-finite function value at point");
    // central differences cannot resolve gradients below ~|f| * 1e-16 / eps
    const double denom_floor = floor * std::max(1.0, std::abs(f0));
    g.backward(out);
    const auto grads = collect_gradients(g, vars, point);

    GradCheckResult result;
    ParamSet probe = point;
    ad::VarMap probe_vars;
    {
        ad::Graph layout;
        for (const auto& [name, p] : point.entries()) probe_vars[name] = layout.constant(Tensor::scalar(0.0));
    }
    for (const auto& [name, analytic] : grads) {
        auto& slot = probe.mutable_value(name);
        for (std::size_t i = 0; i < slot.size(); ++i) {
            const double orig = slot[i];
            slot[i] = orig + eps;
            const double up = evaluate(fn, probe, probe_vars);
            slot[i] = orig - eps;
            const double down = evaluate(fn, probe, probe_vars);
            slot[i] = orig;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[i];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), denom_floor});
            if (rel > result.max_rel_error || result.worst_param.empty()) {
                result = {rel, name, i, a, numeric};
            }
        }
    }
    return result;
}

}  // namespace siphi
