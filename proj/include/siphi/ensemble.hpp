#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "siphi/errors.hpp"
#include "siphi/optim.hpp"

namespace siphi::ensemble {

// Member scores on a shared sample list: pred[m][i] is member m on sample_ids[i].
struct MemberPredictions {
    std::vector<std::string> members;
    std::vector<std::string> sample_ids;
    std::vector<std::vector<double>> pred;

    // Throws ShapeError when the arrays are ragged.
    void validate() const;
    // Rows for the listed members, in that order.
    MemberPredictions select(std::span<const std::size_t> member_indices) const;
};

// Aligns per-member (id -> score) maps onto the first member's id order.
// Throws AlignmentError naming every member whose id set differs.
MemberPredictions align_members(const std::vector<std::string>& members,
                                const std::vector<std::map<std::string, double>>& scores,
                                const std::vector<std::string>& order);

struct EnsembleModel {
    std::vector<std::string> members;
    std::vector<double> logits;

    std::vector<double> weights() const;  // softmax(logits)
};

struct FitOptions {
    double lr = 1e-2;
    int steps = 500;
    double huber_delta = 1.0;
    optim::AdamConfig adam;
};

// Full-batch Adam on the Huber loss of the weighted average, starting from
// uniform logits. No randomness is involved, so fits are reproducible.
EnsembleModel fit_ensemble(const MemberPredictions& val, std::span<const double> targets,
                           const FitOptions& opts = {});

std::vector<double> ensemble_predict(const EnsembleModel& model, const MemberPredictions& preds);

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> enumerate_combinations(std::size_t n, std::size_t k);

struct WeightStats {
    std::string member;
    std::size_t count = 0;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
    std::vector<double> samples;  // sorted
};

// Order statistics of a member's weight over every model containing it.
// Quartiles interpolate linearly between order statistics.
WeightStats weight_distribution(std::span<const EnsembleModel> models, const std::string& member);

nlohmann::ordered_json to_json(const EnsembleModel& m);
EnsembleModel ensemble_model_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const WeightStats& s);

}  // namespace siphi::ensemble
