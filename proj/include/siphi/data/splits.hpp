#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "siphi/data/manifest.hpp"

namespace siphi::data {

struct Fold {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;

    bool operator==(const Fold&) const = default;
};

inline constexpr std::size_t kFolds = 3;

struct FoldSplit {
    std::uint64_t seed = 0;
    std::array<Fold, kFolds> folds;

    bool operator==(const FoldSplit&) const = default;
};

// Listener counts per partition for n listeners: 15% test, 15% val (each at
// least one), the remainder train.
struct PartitionSizes {
    std::size_t train, val, test;
};
PartitionSizes partition_sizes(std::size_t listeners);

// Listener-disjoint three-fold split. Listeners are shuffled once by seed and
// laid on a ring; fold f starts its test block at floor(f * n / 3), followed by
// the val block, with the remaining listeners in train. Sample ids keep
// manifest order inside each partition.
FoldSplit make_splits(const std::vector<Sample>& samples, std::uint64_t seed);

nlohmann::ordered_json to_json(const FoldSplit& s);
FoldSplit splits_from_json(const nlohmann::json& j);
void save_splits(const FoldSplit& s, const std::filesystem::path& path);
FoldSplit load_splits(const std::filesystem::path& path);

}  // namespace siphi::data
