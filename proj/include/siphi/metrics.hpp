#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace siphi::metrics {

double rmse(std::span<const double> pred, std::span<const double> target);

// Pearson correlation. Throws DomainError when either vector is constant
// rather than returning a silent 0.
double ncc(std::span<const double> pred, std::span<const double> target);

// Ranks starting at 1, ties get the average of the positions they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of two rank vectors (Spearman's rho).
double rank_correlation(std::span<const double> ranks_a, std::span<const double> ranks_b);
// rank_correlation(average_ranks(a), average_ranks(b)).
double spearman(std::span<const double> a, std::span<const double> b);

struct FoldMetrics {
    double rmse = 0.0;
    double ncc = 0.0;
    bool operator==(const FoldMetrics&) const = default;
};

struct MetricReport {
    std::string config_id;
    std::vector<FoldMetrics> folds;
    double mean_rmse = 0.0;
    double mean_ncc = 0.0;
    bool operator==(const MetricReport&) const = default;
};

struct FoldPredictions {
    std::vector<double> pred;
    std::vector<double> target;
};

// Per-fold metrics plus their arithmetic means. Metric errors are rethrown
// with the fold index attached.
MetricReport fold_report(std::span<const FoldPredictions> folds, const std::string& config_id = {});

nlohmann::ordered_json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);

}  // namespace siphi::metrics
