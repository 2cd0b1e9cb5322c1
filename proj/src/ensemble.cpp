#include "siphi/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "siphi/autodiff.hpp"
#include "siphi/params.hpp"

namespace siphi::ensemble {

void MemberPredictions::validate() const {
    if (pred.size() != members.size()) throw ShapeError("ensemble: member count differs from prediction rows");
    for (std::size_t m = 0; m < pred.size(); ++m)
        if (pred[m].size() != sample_ids.size())
            throw ShapeError("ensemble: member '" + members[m] + "' has " + std::to_string(pred[m].size()) +
                             " predictions for " + std::to_string(sample_ids.size()) + " samples");
}

MemberPredictions MemberPredictions::select(std::span<const std::size_t> member_indices) const {
    MemberPredictions out;
    out.sample_ids = sample_ids;
    for (auto m : member_indices) {
        out.members.push_back(members.at(m));
        out.pred.push_back(pred.at(m));
    }
    return out;
}

MemberPredictions align_members(const std::vector<std::string>& members,
                                const std::vector<std::map<std::string, double>>& scores,
                                const std::vector<std::string>& order) {
    if (members.size() != scores.size()) throw ShapeError("align_members: member names differ from score maps");
    const std::set<std::string> wanted(order.begin(), order.end());
    std::vector<std::string> offenders;
    for (std::size_t m = 0; m < members.size(); ++m) {
        bool same = scores[m].size() == wanted.size();
        for (const auto& id : order) same = same && scores[m].count(id) != 0;
        if (!same) offenders.push_back(members[m]);
    }
    if (!offenders.empty()) {
        std::string msg = "ensemble: sample ids not aligned for";
        for (const auto& o : offenders) msg += " '" + o + "'";
        throw AlignmentError(msg);
    }
    MemberPredictions out{members, order, {}};
    for (const auto& s : scores) {
        auto& row = out.pred.emplace_back();
        for (const auto& id : order) row.push_back(s.at(id));
    }
    return out;
}

std::vector<double> EnsembleModel::weights() const {
    if (logits.empty()) return {};
    const double hi = *std::max_element(logits.begin(), logits.end());
    std::vector<double> w(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) sum += (w[i] = std::exp(logits[i] - hi));
    for (auto& v : w) v /= sum;
    return w;
}

EnsembleModel fit_ensemble(const MemberPredictions& val, std::span<const double> targets, const FitOptions& opts) {
    val.validate();
    if (val.members.empty()) throw DomainError("fit_ensemble: no members");
    if (targets.size() != val.sample_ids.size()) throw ShapeError("fit_ensemble: target count differs from samples");
    if (targets.empty()) throw DomainError("fit_ensemble: no samples");

    const auto m = val.members.size();
    const auto n = targets.size();
    EnsembleModel model{val.members, std::vector<double>(m, 0.0)};
    if (m == 1) return model;

    Tensor p = Tensor::matrix(n, m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i) p(i, j) = val.pred[j][i];
    const Tensor target = Tensor::row(std::vector<double>(targets.begin(), targets.end()));

    ParamSet params;
    params.add("logits", Tensor::matrix(1, m));
    optim::AdamState state;
    for (int step = 0; step < opts.steps; ++step) {
        ad::Graph g;
        const auto vars = params.bind(g);
        const auto w = ad::softmax_rows(g, vars.at("logits"));
        const auto out = ad::matmul(g, g.constant(p), ad::transpose(g, w));
        const auto loss = ad::huber_loss(g, out, target, opts.huber_delta);
        g.backward(loss);
        optim::adam_step(params, collect_gradients(g, vars, params), state, opts.lr, opts.adam);
    }
    const auto& l = params.get("logits");
    model.logits.assign(l.values().begin(), l.values().end());
    return model;
}

std::vector<double> ensemble_predict(const EnsembleModel& model, const MemberPredictions& preds) {
    preds.validate();
    if (model.members != preds.members) throw AlignmentError("ensemble_predict: member ids differ from the model");
    const auto w = model.weights();
    std::vector<double> out(preds.sample_ids.size(), 0.0);
    for (std::size_t m = 0; m < w.size(); ++m)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w[m] * preds.pred[m][i];
    return out;
}

std::vector<std::vector<std::size_t>> enumerate_combinations(std::size_t n, std::size_t k) {
    if (k < 1) throw DomainError("enumerate_combinations: k must be >= 1");
    if (k > n) throw DomainError("enumerate_combinations: k > n");
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> c(k);
    for (std::size_t i = 0; i < k; ++i) c[i] = i;
    while (true) {
        out.push_back(c);
        std::size_t i = k;
        while (i > 0 && c[i - 1] == n - k + (i - 1)) --i;
        if (i == 0) break;
        ++c[i - 1];
        for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
    }
    return out;
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

WeightStats weight_distribution(std::span<const EnsembleModel> models, const std::string& member) {
    WeightStats s;
    s.member = member;
    for (const auto& model : models) {
        const auto w = model.weights();
        for (std::size_t i = 0; i < model.members.size(); ++i)
            if (model.members[i] == member) s.samples.push_back(w[i]);
    }
    if (s.samples.empty()) throw DomainError("weight_distribution: '" + member + "' is in no ensemble");
    std::sort(s.samples.begin(), s.samples.end());
    s.count = s.samples.size();
    s.min = s.samples.front();
    s.max = s.samples.back();
    s.q1 = quantile(s.samples, 0.25);
    s.median = quantile(s.samples, 0.5);
    s.q3 = quantile(s.samples, 0.75);
    return s;
}

nlohmann::ordered_json to_json(const EnsembleModel& m) {
    return {{"members", m.members}, {"logits", m.logits}, {"weights", m.weights()}};
}

EnsembleModel ensemble_model_from_json(const nlohmann::json& j) {
    EnsembleModel m{j.at("members").get<std::vector<std::string>>(), j.at("logits").get<std::vector<double>>()};
    if (m.members.size() != m.logits.size()) throw ShapeError("ensemble model: members differ from logits");
    return m;
}

nlohmann::ordered_json to_json(const WeightStats& s) {
    return {{"member", s.member}, {"count", s.count}, {"min", s.min},       {"q1", s.q1},
            {"median", s.median}, {"q3", s.q3},       {"max", s.max},       {"samples", s.samples}};
}

}  // namespace siphi::ensemble
