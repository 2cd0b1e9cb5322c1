#include "siphi/data/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "siphi/rng.hpp"

namespace siphi::data {

PartitionSizes partition_sizes(std::size_t listeners) {
    if (listeners < 3) throw DomainError("make_splits: need at least 3 distinct listeners, got " + std::to_string(listeners));
    const auto share = static_cast<std::size_t>(std::llround(0.15 * static_cast<double>(listeners)));
    const auto held = std::max<std::size_t>(1, share);
    return {listeners - 2 * held, held, held};
}

FoldSplit make_splits(const std::vector<Sample>& samples, std::uint64_t seed) {
    std::set<std::string> unique;
    for (const auto& s : samples) unique.insert(s.listener_id);
    std::vector<std::string> ring(unique.begin(), unique.end());
    const auto n = ring.size();
    const auto sizes = partition_sizes(n);
    Rng rng(derive_seed(seed, "listener-split"));
    rng.shuffle(ring);

    FoldSplit out;
    out.seed = seed;
    for (std::size_t f = 0; f < kFolds; ++f) {
        const auto start = f * n / kFolds;
        std::map<std::string, int> role;  // 0 train, 1 val, 2 test
        for (std::size_t i = 0; i < n; ++i) {
            const auto pos = (i + n - start) % n;
            role[ring[i]] = pos < sizes.test ? 2 : pos < sizes.test + sizes.val ? 1 : 0;
        }
        auto& fold = out.folds[f];
        for (const auto& s : samples) {
            switch (role.at(s.listener_id)) {
                case 0: fold.train.push_back(s.sample_id); break;
                case 1: fold.val.push_back(s.sample_id); break;
                default: fold.test.push_back(s.sample_id); break;
            }
        }
    }
    return out;
}

nlohmann::ordered_json to_json(const FoldSplit& s) {
    nlohmann::ordered_json j;
    j["seed"] = s.seed;
    auto& folds = j["folds"] = nlohmann::ordered_json::array();
    for (const auto& f : s.folds) folds.push_back({{"train", f.train}, {"val", f.val}, {"test", f.test}});
    return j;
}

FoldSplit splits_from_json(const nlohmann::json& j) {
    FoldSplit s;
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& folds = j.at("folds");
    if (folds.size() != kFolds) throw DomainError("split file must hold exactly 3 folds");
    for (std::size_t i = 0; i < kFolds; ++i) {
        s.folds[i].train = folds[i].at("train").get<std::vector<std::string>>();
        s.folds[i].val = folds[i].at("val").get<std::vector<std::string>>();
        s.folds[i].test = folds[i].at("test").get<std::vector<std::string>>();
    }
    return s;
}

void save_splits(const FoldSplit& s, const std::filesystem::path& path) {
    data::write_text_file(path, to_json(s).dump(2) + "\n");
}

FoldSplit load_splits(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open split file '" + path.string() + "'");
    return splits_from_json(nlohmann::json::parse(in));
}

}  // namespace siphi::data
