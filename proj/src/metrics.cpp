#include "siphi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "siphi/errors.hpp"

namespace siphi::metrics {

namespace {

void require_pair(std::span<const double> a, std::span<const double> b, std::size_t min_len, const char* op) {
    if (a.size() != b.size())
        throw ShapeError(std::string(op) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    if (a.size() < min_len)
        throw DomainError(std::string(op) + ": need at least " + std::to_string(min_len) + " elements");
}

double pearson(std::span<const double> a, std::span<const double> b, const char* op) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw DomainError(std::string(op) + ": correlation undefined for a constant vector");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> target) {
    require_pair(pred, target, 1, "rmse");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
    return std::sqrt(s / static_cast<double>(pred.size()));
}

double ncc(std::span<const double> pred, std::span<const double> target) {
    require_pair(pred, target, 2, "ncc");
    return pearson(pred, target, "ncc");
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double rank_correlation(std::span<const double> ranks_a, std::span<const double> ranks_b) {
    require_pair(ranks_a, ranks_b, 2, "rank_correlation");
    return pearson(ranks_a, ranks_b, "rank_correlation");
}

double spearman(std::span<const double> a, std::span<const double> b) {
    require_pair(a, b, 2, "spearman");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return rank_correlation(ra, rb);
}

MetricReport fold_report(std::span<const FoldPredictions> folds, const std::string& config_id) {
    if (folds.empty()) throw DomainError("fold_report: no folds");
    MetricReport r;
    r.config_id = config_id;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        try {
            r.folds.push_back({rmse(folds[f].pred, folds[f].target), ncc(folds[f].pred, folds[f].target)});
        } catch (const Error& ex) {
            throw DomainError("fold " + std::to_string(f) + ": " + ex.what());
        }
    }
    for (const auto& f : r.folds) {
        r.mean_rmse += f.rmse;
        r.mean_ncc += f.ncc;
    }
    r.mean_rmse /= static_cast<double>(r.folds.size());
    r.mean_ncc /= static_cast<double>(r.folds.size());
    return r;
}

nlohmann::ordered_json to_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    j["config"] = r.config_id;
    auto& folds = j["folds"] = nlohmann::ordered_json::array();
    for (const auto& f : r.folds) folds.push_back({{"rmse", f.rmse}, {"ncc", f.ncc}});
    j["mean_rmse"] = r.mean_rmse;
    j["mean_ncc"] = r.mean_ncc;
    return j;
}

MetricReport metric_report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.config_id = j.at("config").get<std::string>();
    for (const auto& f : j.at("folds")) r.folds.push_back({f.at("rmse").get<double>(), f.at("ncc").get<double>()});
    r.mean_rmse = j.at("mean_rmse").get<double>();
    r.mean_ncc = j.at("mean_ncc").get<double>();
    return r;
}

}  // namespace siphi::metrics
