#include "siphi/optim.hpp"

#include <cmath>
#include <numbers>

#include "siphi/errors.hpp"

namespace siphi::optim {

void adam_step(ParamSet& params, const Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg) {
    for (const auto& [name, entry] : params.entries()) {
        if (!entry.trainable) continue;
        auto it = grads.find(name);
        if (it == grads.end()) throw ShapeError("adam_step: missing gradient for '" + name + "'");
        if (!it->second.same_shape(entry.value))
            throw ShapeError("adam_step: gradient for '" + name + "' has shape " + shape_string(it->second.shape()) +
                             ", parameter is " + shape_string(entry.value.shape()));
        if (!it->second.all_finite()) throw NumericError("adam_step: non-finite gradient for parameter '" + name + "'");
    }

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (const auto& name : params.names()) {
        if (!params.trainable(name)) continue;
        auto& p = params.mutable_value(name);
        const auto& g = grads.at(name);
        auto& m = state.first_moment.try_emplace(name, Tensor(p.shape(), 0.0)).first->second;
        auto& v = state.second_moment.try_emplace(name, Tensor(p.shape(), 0.0)).first->second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

void ScheduleSpec::validate() const {
    if (!(min_lr > 0.0 && min_lr <= base_lr)) throw ConfigError("schedule: require 0 < min_lr <= base_lr");
    if (total_epochs < 1) throw ConfigError("schedule: total_epochs must be >= 1");
    if (warmup_epochs < 0 || warmup_epochs >= total_epochs)
        throw ConfigError("schedule: require 0 <= warmup_epochs < total_epochs");
    if (!(start_factor > 0.0 && start_factor <= 1.0)) throw ConfigError("schedule: require 0 < start_factor <= 1");
    if (kind == ScheduleKind::cosine && warmup_epochs != 0)
        throw ConfigError("schedule: plain cosine takes no warmup epochs");
}

double lr_at(const ScheduleSpec& spec, int epoch) {
    spec.validate();
    if (epoch < 0 || epoch > spec.total_epochs)
        throw DomainError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                          std::to_string(spec.total_epochs) + "]");
    const int warmup = spec.kind == ScheduleKind::warmup_cosine ? spec.warmup_epochs : 0;
    if (epoch < warmup) {
        const double frac = static_cast<double>(epoch) / static_cast<double>(warmup);
        return spec.base_lr * (spec.start_factor + (1.0 - spec.start_factor) * frac);
    }
    const double tau = static_cast<double>(epoch - warmup) / static_cast<double>(spec.total_epochs - warmup);
    return spec.min_lr + 0.5 * (spec.base_lr - spec.min_lr) * (1.0 + std::cos(std::numbers::pi * tau));
}

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::cosine ? "cosine" : "warmup-cosine"; }

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "cosine") return ScheduleKind::cosine;
    if (s == "warmup-cosine") return ScheduleKind::warmup_cosine;
    throw ConfigError("unknown schedule kind '" + s + "'");
}

}  // namespace siphi::optim
