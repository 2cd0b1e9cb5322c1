#include "siphi/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "siphi/checkpoint.hpp"
#include "siphi/errors.hpp"
#include "siphi/metrics.hpp"
#include "siphi/rng.hpp"

namespace siphi::train {

void TrainRecipe::validate() const {
    if (batch_size < 1) throw ConfigError("recipe: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("recipe: epochs must be >= 1");
    if (!(huber_delta > 0.0)) throw ConfigError("recipe: huber delta must be positive");
    schedule.validate();
    if (schedule.total_epochs != epochs) throw ConfigError("recipe: schedule length differs from epochs");
}

void TrainRecipe::set_epochs(int n) {
    epochs = n;
    schedule.total_epochs = n;
    // a warmup longer than the run would leave no cosine phase
    if (schedule.warmup_epochs >= n) schedule.warmup_epochs = std::max(0, n - 1);
}

TrainRecipe default_recipe(heads::Arch arch) {
    TrainRecipe r;
    if (arch == heads::Arch::wa_tgp) {
        r.schedule = {optim::ScheduleKind::cosine, 1e-4, 1e-6, 50, 0, 1.0};
    } else {
        r.schedule = {optim::ScheduleKind::warmup_cosine, 3e-5, 1e-6, 50, 10, 0.1};
    }
    return r;
}

TrainRecipe desk_recipe(heads::Arch arch) {
    TrainRecipe r;
    r.batch_size = 32;
    r.epochs = 60;
    if (arch == heads::Arch::wa_tgp) {
        r.schedule = {optim::ScheduleKind::cosine, 3e-2, 1e-4, 60, 0, 1.0};
    } else {
        r.schedule = {optim::ScheduleKind::warmup_cosine, 1e-2, 1e-4, 60, 5, 0.1};
    }
    return r;
}

nlohmann::ordered_json to_json(const TrainRecipe& r) {
    return {{"batch_size", r.batch_size},
            {"epochs", r.epochs},
            {"huber_delta", r.huber_delta},
            {"schedule",
             {{"kind", optim::to_string(r.schedule.kind)},
              {"base_lr", r.schedule.base_lr},
              {"min_lr", r.schedule.min_lr},
              {"total_epochs", r.schedule.total_epochs},
              {"warmup_epochs", r.schedule.warmup_epochs},
              {"start_factor", r.schedule.start_factor}}},
            {"adam", {{"beta1", r.adam.beta1}, {"beta2", r.adam.beta2}, {"eps", r.adam.eps}}},
            {"seed", r.seed}};
}

TrainRecipe recipe_from_json(const nlohmann::json& j) {
    TrainRecipe r;
    r.batch_size = j.at("batch_size").get<std::size_t>();
    r.epochs = j.at("epochs").get<int>();
    r.huber_delta = j.at("huber_delta").get<double>();
    const auto& s = j.at("schedule");
    r.schedule.kind = optim::schedule_kind_from_string(s.at("kind").get<std::string>());
    r.schedule.base_lr = s.at("base_lr").get<double>();
    r.schedule.min_lr = s.at("min_lr").get<double>();
    r.schedule.total_epochs = s.at("total_epochs").get<int>();
    r.schedule.warmup_epochs = s.at("warmup_epochs").get<int>();
    r.schedule.start_factor = s.at("start_factor").get<double>();
    const auto& a = j.at("adam");
    r.adam = {a.at("beta1").get<double>(), a.at("beta2").get<double>(), a.at("eps").get<double>()};
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

nlohmann::ordered_json to_json(const RunRecord& r) {
    nlohmann::ordered_json j;
    auto& epochs = j["epochs"] = nlohmann::ordered_json::array();
    for (std::size_t e = 0; e < r.epochs.size(); ++e) {
        const auto& rec = r.epochs[e];
        nlohmann::ordered_json row{{"epoch", e}, {"train_loss", rec.train_loss}, {"val_rmse", rec.val_rmse}};
        row["val_ncc"] = std::isfinite(rec.val_ncc) ? nlohmann::ordered_json(rec.val_ncc) : nlohmann::ordered_json();
        row["lr"] = rec.lr;
        epochs.push_back(std::move(row));
    }
    j["best_epoch"] = r.best_epoch;
    j["checkpoint"] = r.checkpoint;
    return j;
}

int select_checkpoint(std::span<const double> val_rmse) {
    if (val_rmse.empty()) throw DomainError("select_checkpoint: empty run record");
    int best = 0;
    for (std::size_t e = 1; e < val_rmse.size(); ++e)
        if (val_rmse[e] < val_rmse[static_cast<std::size_t>(best)]) best = static_cast<int>(e);
    return best;
}

int select_checkpoint(const RunRecord& record) {
    std::vector<double> v;
    for (const auto& e : record.epochs) v.push_back(e.val_rmse);
    return select_checkpoint(v);
}

std::vector<Example> prepare_examples(const data::Dataset& ds, std::span<const std::string> ids,
                                      const heads::HeadConfig& cfg, const heads::HeadDims& dims) {
    std::vector<Example> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const auto i = ds.index_of(id);
        const auto& s = ds.manifest.samples[i];
        out.push_back({id, heads::prepare_input(ds.features[i], s.audiogram, cfg, dims), s.score});
    }
    return out;
}

namespace {

BatchGradient chunk_gradient(const heads::HeadParams& p, std::span<const Example> examples,
                             std::span<const std::size_t> indices, double delta, double weight) {
    ad::Graph g;
    const auto vars = p.params.bind(g);
    std::vector<ad::Var> preds;
    std::vector<double> targets;
    preds.reserve(indices.size());
    for (auto i : indices) {
        preds.push_back(heads::head_graph(g, examples[i].input, vars, p.config, p.dims));
        targets.push_back(examples[i].target);
    }
    auto loss = ad::scale(g, ad::huber_loss(g, ad::stack_rows(g, preds), Tensor::row(targets), delta), weight);
    g.backward(loss);
    return {g.value(loss).item(), collect_gradients(g, vars, p.params)};
}

}  // namespace

BatchGradient batch_gradient(const heads::HeadParams& p, std::span<const Example> examples,
                             std::span<const std::size_t> indices, double delta, kernels::Exec exec) {
    if (indices.empty()) throw DomainError("batch_gradient: empty batch");
    const auto n = indices.size();
    const auto chunks = (n + kGradientChunk - 1) / kGradientChunk;
    std::vector<BatchGradient> parts(chunks);
    auto run = [&](std::size_t c) {
        const auto begin = c * kGradientChunk;
        const auto len = std::min(kGradientChunk, n - begin);
        parts[c] = chunk_gradient(p, examples, indices.subspan(begin, len), delta,
                                  static_cast<double>(len) / static_cast<double>(n));
    };
    if (exec == kernels::Exec::parallel && chunks > 1) {
        std::exception_ptr failure;
        const auto total = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t c = 0; c < total; ++c) {
            try {
                run(static_cast<std::size_t>(c));
            } catch (...) {
#pragma omp critical(siphi_batch_gradient)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t c = 0; c < chunks; ++c) run(c);
    }

    BatchGradient out = std::move(parts[0]);
    for (std::size_t c = 1; c < chunks; ++c) {
        out.loss += parts[c].loss;
        for (auto& [name, g] : out.grads) {
            const auto& add = parts[c].grads.at(name);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += add[i];
        }
    }
    return out;
}

std::vector<double> predict(const heads::HeadParams& p, std::span<const Example> examples, kernels::Exec exec) {
    std::vector<heads::HeadInput> inputs;
    inputs.reserve(examples.size());
    for (const auto& e : examples) inputs.push_back(e.input);
    return heads::head_forward(inputs, p, exec);
}

TrainResult train(const heads::HeadConfig& cfg, const heads::HeadDims& dims, const TrainRecipe& recipe,
                  std::span<const Example> train_set, std::span<const Example> val_set,
                  const std::optional<std::filesystem::path>& checkpoint_path, kernels::Exec exec) {
    recipe.validate();
    if (train_set.empty()) throw DomainError("train: empty training split");
    if (val_set.empty()) throw DomainError("train: empty validation split");

    const data::SfmDescriptor sfm{"", dims.layers, dims.channels, std::nullopt};
    auto params = heads::init_head(cfg, sfm, dims.audiogram_bins);
    optim::AdamState adam;

    std::vector<double> val_targets;
    for (const auto& e : val_set) val_targets.push_back(e.target);

    TrainResult result{{}, params};
    double best_rmse = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(train_set.size());

    for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
        const double lr = optim::lr_at(recipe.schedule, epoch);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(recipe.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += recipe.batch_size, ++batch_index) {
            const auto len = std::min(recipe.batch_size, order.size() - begin);
            auto bg = batch_gradient(params, train_set, std::span(order).subspan(begin, len), recipe.huber_delta, exec);
            if (!std::isfinite(bg.loss))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index));
            try {
                optim::adam_step(params.params, bg.grads, adam, lr, recipe.adam);
            } catch (const NumericError& ex) {
                throw NumericError("train: epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) +
                                   ": " + ex.what());
            }
            loss_sum += bg.loss * static_cast<double>(len);
        }

        const auto preds = predict(params, val_set, exec);
        EpochRecord rec;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val_rmse = metrics::rmse(preds, val_targets);
        try {
            rec.val_ncc = metrics::ncc(preds, val_targets);
        } catch (const DomainError&) {
            rec.val_ncc = std::numeric_limits<double>::quiet_NaN();
        }
        rec.lr = lr;
        if (!std::isfinite(rec.val_rmse))
            throw NumericError("train: non-finite validation RMSE at epoch " + std::to_string(epoch));
        if (rec.val_rmse < best_rmse) {
            best_rmse = rec.val_rmse;
            result.best = params;
        }
        result.record.epochs.push_back(rec);
    }
    result.record.best_epoch = select_checkpoint(result.record);
    if (checkpoint_path) {
        heads::save_checkpoint(result.best, *checkpoint_path);
        result.record.checkpoint = checkpoint_path->string();
    }
    return result;
}

}  // namespace siphi::train
