#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "siphi/data/manifest.hpp"
#include "siphi/data/splits.hpp"
#include "siphi/heads.hpp"
#include "siphi/metrics.hpp"
#include "siphi/trainer.hpp"

namespace siphi::sweep {

struct SweepError : Error {
    using Error::Error;
};

struct ConfigId {
    std::string sfm;
    heads::Arch arch = heads::Arch::wa_tgp;
    heads::LayerMode layers = heads::LayerMode::all();
    std::size_t dim = 0;

    // "<sfm>/<arch>/<layers>/<dim>", e.g. "Canary/dt/all/384".
    std::string str() const;
    bool operator==(const ConfigId&) const = default;
};

nlohmann::ordered_json to_json(const ConfigId& c);
ConfigId config_id_from_json(const nlohmann::json& j);

// Scores of one trained head on one fold, kept so ensembles can be fitted
// later without retraining.
struct PartitionPredictions {
    std::vector<std::string> ids;
    std::vector<double> pred;
    std::vector<double> target;
    bool operator==(const PartitionPredictions&) const = default;
};

struct FoldOutput {
    int fold = 0;
    int best_epoch = 0;
    PartitionPredictions val;
    PartitionPredictions test;
    bool operator==(const FoldOutput&) const = default;
};

struct SweepRow {
    ConfigId config;
    metrics::MetricReport report;  // on the test partition of each fold
    std::vector<FoldOutput> folds;
};

struct SweepResult {
    std::string kind;  // "layers" or "dims"
    std::vector<SweepRow> rows;
    nlohmann::ordered_json provenance;
};

struct SweepOptions {
    heads::HeadConfig head;     // template; arch, layers and dim are set per row
    train::TrainRecipe recipe;  // seed is replaced per run
    std::uint64_t seed = 17;
    std::vector<int> folds = {0, 1, 2};
    int workers = 1;
    // When set, each run writes <run_dir>/<config id>/fold<f>.{json,head}.
    std::optional<std::filesystem::path> run_dir;
};

// Seed of the run for (config, fold); independent of scheduling order.
std::uint64_t run_seed(std::uint64_t seed, const ConfigId& id, int fold);

// Single(0..L-1) followed by All, every fold.
SweepResult layer_sweep(const data::Dataset& ds, const data::FoldSplit& splits, heads::Arch arch,
                        const SweepOptions& opts);

// One row per grid entry at a fixed layer mode.
SweepResult dim_sweep(const data::Dataset& ds, const data::FoldSplit& splits, heads::Arch arch,
                      const heads::LayerMode& layers, std::span<const std::size_t> grid, const SweepOptions& opts);

// Trains every (config, fold) job; rows come back in the order of configs.
std::vector<SweepRow> run_configs(const data::Dataset& ds, const data::FoldSplit& splits,
                                  std::span<const ConfigId> configs, const SweepOptions& opts);

// Lowest mean RMSE, then higher mean NCC, then the smaller config id string.
std::size_t best_config(std::span<const SweepRow> rows);
std::size_t best_config(const SweepResult& r);

nlohmann::ordered_json to_json(const SweepRow& r);
SweepRow sweep_row_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const SweepResult& r);
SweepResult sweep_result_from_json(const nlohmann::json& j);

// Aligned text table, one line per row, best row marked with '*'.
std::string format_table(const SweepResult& r);

}  // namespace siphi::sweep
