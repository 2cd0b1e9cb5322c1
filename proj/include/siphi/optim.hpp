#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "siphi/params.hpp"

namespace siphi::optim {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
};

struct AdamState {
    std::map<std::string, Tensor> first_moment;
    std::map<std::string, Tensor> second_moment;
    std::uint64_t step = 0;
};

// Bias-corrected Adam update of every trainable parameter, no weight decay.
// Throws NumericError naming the parameter if any gradient is non-finite;
// in that case neither params nor state are modified.
void adam_step(ParamSet& params, const Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg = {});

enum class ScheduleKind { cosine, warmup_cosine };

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::cosine;
    double base_lr = 1e-4;
    double min_lr = 1e-6;
    int total_epochs = 50;
    int warmup_epochs = 0;
    double start_factor = 1.0;

    void validate() const;
};

// Epoch-granular learning rate. Cosine phase spans [warmup_epochs, total_epochs];
// warmup ramps linearly from start_factor * base_lr to base_lr.
double lr_at(const ScheduleSpec& spec, int epoch);

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);

}  // namespace siphi::optim
