#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "siphi/data/manifest.hpp"
#include "siphi/heads.hpp"
#include "siphi/kernels.hpp"
#include "siphi/optim.hpp"

namespace siphi::train {

struct TrainRecipe {
    std::size_t batch_size = 128;
    int epochs = 50;
    double huber_delta = 1.0;
    optim::ScheduleSpec schedule;
    optim::AdamConfig adam;
    std::uint64_t seed = 17;

    void validate() const;
    // Keeps schedule.total_epochs in step with epochs; a warmup that no longer fits is cut to n - 1.
    void set_epochs(int n);
};

// WA_TGP: cosine 1e-4 -> 1e-6. WA_TT / DT: 10 warmup epochs from 0.1x, then cosine 3e-5 -> 1e-6.
// 50 epochs, batch 128, Adam (0.9, 0.98) for all.
TrainRecipe default_recipe(heads::Arch arch);

// Same schedule shapes with larger rates, batch 32 and more epochs, for the
// small synthetic sets the tests and examples run on.
TrainRecipe desk_recipe(heads::Arch arch);

nlohmann::ordered_json to_json(const TrainRecipe& r);
TrainRecipe recipe_from_json(const nlohmann::json& j);

struct EpochRecord {
    double train_loss = 0.0;
    double val_rmse = 0.0;
    double val_ncc = 0.0;  // NaN when predictions are constant
    double lr = 0.0;
};

struct RunRecord {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    std::string checkpoint;
};

nlohmann::ordered_json to_json(const RunRecord& r);

// Index of the lowest val RMSE; ties resolve to the earliest epoch.
int select_checkpoint(const RunRecord& record);
int select_checkpoint(std::span<const double> val_rmse);

struct Example {
    std::string id;
    heads::HeadInput input;
    double target = 0.0;
};

std::vector<Example> prepare_examples(const data::Dataset& ds, std::span<const std::string> ids,
                                      const heads::HeadConfig& cfg, const heads::HeadDims& dims);

struct BatchGradient {
    double loss = 0.0;
    Gradients grads;
};

// Mean Huber loss of the selected examples and its gradient. Examples are
// processed in fixed chunks of kGradientChunk; chunk gradients are summed in
// chunk order, so the serial and parallel paths agree bit for bit.
inline constexpr std::size_t kGradientChunk = 8;
BatchGradient batch_gradient(const heads::HeadParams& p, std::span<const Example> examples,
                             std::span<const std::size_t> indices, double delta,
                             kernels::Exec exec = kernels::Exec::parallel);

std::vector<double> predict(const heads::HeadParams& p, std::span<const Example> examples,
                            kernels::Exec exec = kernels::Exec::parallel);

struct TrainResult {
    RunRecord record;
    heads::HeadParams best;  // parameters at record.best_epoch
};

// Fixed-epoch mini-batch training with per-epoch validation. The parameters
// with the lowest validation RMSE are kept and, if checkpoint_path is given,
// written there in HEAD format. Shuffling is derived from (recipe.seed, epoch);
// the last partial batch is trained.
TrainResult train(const heads::HeadConfig& cfg, const heads::HeadDims& dims, const TrainRecipe& recipe,
                  std::span<const Example> train_set, std::span<const Example> val_set,
                  const std::optional<std::filesystem::path>& checkpoint_path = std::nullopt,
                  kernels::Exec exec = kernels::Exec::parallel);

}  // namespace siphi::train
