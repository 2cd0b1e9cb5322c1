#include "siphi/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

#include "siphi/checkpoint.hpp"
#include "siphi/errors.hpp"
#include "siphi/rng.hpp"

namespace siphi::sweep {

namespace {

using nlohmann::ordered_json;

ordered_json to_json(const PartitionPredictions& p) {
    return {{"ids", p.ids}, {"pred", p.pred}, {"target", p.target}};
}

PartitionPredictions partition_from_json(const nlohmann::json& j) {
    PartitionPredictions p{j.at("ids").get<std::vector<std::string>>(), j.at("pred").get<std::vector<double>>(),
                           j.at("target").get<std::vector<double>>()};
    if (p.ids.size() != p.pred.size() || p.ids.size() != p.target.size())
        throw ConfigError("sweep result: prediction arrays differ in length");
    return p;
}

const std::vector<std::string>& partition(const data::Fold& f, const char* name) {
    if (std::string_view(name) == "train") return f.train;
    if (std::string_view(name) == "val") return f.val;
    return f.test;
}

struct Job {
    std::size_t config;
    int fold;
};

FoldOutput run_job(const data::Dataset& ds, const data::FoldSplit& splits, const ConfigId& id, int fold,
                   const SweepOptions& opts) {
    const auto& f = splits.folds.at(static_cast<std::size_t>(fold));
    auto cfg = opts.head;
    cfg.arch = id.arch;
    cfg.layers = id.layers;
    cfg.embed_dim = id.dim;
    const auto seed = run_seed(opts.seed, id, fold);
    cfg.seed = derive_seed(seed, "init");
    auto recipe = opts.recipe;
    recipe.seed = derive_seed(seed, "shuffle");

    const heads::HeadDims dims{ds.manifest.sfm.layers, ds.manifest.sfm.channels,
                               ds.manifest.audiogram_frequencies.size()};
    const auto train_set = train::prepare_examples(ds, partition(f, "train"), cfg, dims);
    const auto val_set = train::prepare_examples(ds, partition(f, "val"), cfg, dims);
    const auto test_set = train::prepare_examples(ds, partition(f, "test"), cfg, dims);

    std::optional<std::filesystem::path> ckpt;
    std::filesystem::path run_base;
    if (opts.run_dir) {
        run_base = *opts.run_dir / id.sfm / heads::to_string(id.arch) / heads::to_string(id.layers) /
                   std::to_string(id.dim);
        ckpt = run_base / ("fold" + std::to_string(fold) + ".head");
    }
    auto result = train::train(cfg, dims, recipe, train_set, val_set, ckpt);

    FoldOutput out;
    out.fold = fold;
    out.best_epoch = result.record.best_epoch;
    auto fill = [&](PartitionPredictions& p, const std::vector<train::Example>& set) {
        p.pred = train::predict(result.best, set);
        for (const auto& e : set) {
            p.ids.push_back(e.id);
            p.target.push_back(e.target);
        }
    };
    fill(out.val, val_set);
    fill(out.test, test_set);

    if (opts.run_dir) {
        auto j = train::to_json(result.record);
        j["checkpoint"] = ckpt->filename().string();
        ordered_json doc{{"config", sweep::to_json(id)}, {"fold", fold}, {"seed", seed},
                         {"recipe", train::to_json(recipe)}, {"record", j}};
        data::write_text_file(run_base / ("fold" + std::to_string(fold) + ".json"), doc.dump(2) + "\n");
    }
    return out;
}

SweepResult make_result(std::string kind, std::vector<SweepRow> rows, const SweepOptions& opts) {
    SweepResult r;
    r.kind = std::move(kind);
    r.rows = std::move(rows);
    r.provenance = {{"seed", opts.seed},
                    {"folds", opts.folds},
                    {"head", heads::to_json(opts.head)},
                    {"recipe", train::to_json(opts.recipe)}};
    return r;
}

}  // namespace

std::string ConfigId::str() const {
    return sfm + "/" + heads::to_string(arch) + "/" + heads::to_string(layers) + "/" + std::to_string(dim);
}

nlohmann::ordered_json to_json(const ConfigId& c) {
    return {{"id", c.str()},
            {"sfm", c.sfm},
            {"arch", heads::to_string(c.arch)},
            {"layers", heads::to_string(c.layers)},
            {"dim", c.dim}};
}

ConfigId config_id_from_json(const nlohmann::json& j) {
    return {j.at("sfm").get<std::string>(), heads::arch_from_string(j.at("arch").get<std::string>()),
            heads::layer_mode_from_string(j.at("layers").get<std::string>()), j.at("dim").get<std::size_t>()};
}

std::uint64_t run_seed(std::uint64_t seed, const ConfigId& id, int fold) {
    return derive_seed(seed, id.str() + "#fold" + std::to_string(fold));
}

std::vector<SweepRow> run_configs(const data::Dataset& ds, const data::FoldSplit& splits,
                                  std::span<const ConfigId> configs, const SweepOptions& opts) {
    if (opts.folds.empty()) throw ConfigError("sweep: no folds selected");
    for (int f : opts.folds)
        if (f < 0 || f >= static_cast<int>(data::kFolds)) throw ConfigError("sweep: fold index out of range");
    if (opts.workers < 1) throw ConfigError("sweep: workers must be >= 1");

    std::vector<Job> jobs;
    for (std::size_t c = 0; c < configs.size(); ++c)
        for (int f : opts.folds) jobs.push_back({c, f});

    std::vector<FoldOutput> outputs(jobs.size());
    std::vector<std::string> errors(jobs.size());
    const auto total = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(opts.workers)
    for (std::int64_t i = 0; i < total; ++i) {
        const auto& job = jobs[static_cast<std::size_t>(i)];
        try {
            outputs[static_cast<std::size_t>(i)] = run_job(ds, splits, configs[job.config], job.fold, opts);
        } catch (const std::exception& ex) {
            errors[static_cast<std::size_t>(i)] = ex.what();
        }
    }
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (!errors[i].empty())
            throw SweepError("config " + configs[jobs[i].config].str() + ", fold " + std::to_string(jobs[i].fold) +
                             ": " + errors[i]);

    std::vector<SweepRow> rows;
    std::size_t next = 0;
    for (const auto& id : configs) {
        SweepRow row{id, {}, {}};
        std::vector<metrics::FoldPredictions> preds;
        for (std::size_t f = 0; f < opts.folds.size(); ++f, ++next) {
            row.folds.push_back(std::move(outputs[next]));
            preds.push_back({row.folds.back().test.pred, row.folds.back().test.target});
        }
        try {
            row.report = metrics::fold_report(preds, id.str());
        } catch (const std::exception& ex) {
            throw SweepError("config " + id.str() + ": " + ex.what());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

SweepResult layer_sweep(const data::Dataset& ds, const data::FoldSplit& splits, heads::Arch arch,
                        const SweepOptions& opts) {
    const auto& sfm = ds.manifest.sfm;
    std::vector<ConfigId> configs;
    for (int k = 0; k < sfm.layers; ++k)
        configs.push_back({sfm.name, arch, heads::LayerMode::single(k), opts.head.embed_dim});
    configs.push_back({sfm.name, arch, heads::LayerMode::all(), opts.head.embed_dim});
    return make_result("layers", run_configs(ds, splits, configs, opts), opts);
}

SweepResult dim_sweep(const data::Dataset& ds, const data::FoldSplit& splits, heads::Arch arch,
                      const heads::LayerMode& layers, std::span<const std::size_t> grid, const SweepOptions& opts) {
    if (grid.empty()) throw ConfigError("dim_sweep: empty dimension grid");
    std::vector<ConfigId> configs;
    for (auto d : grid) configs.push_back({ds.manifest.sfm.name, arch, layers, d});
    return make_result("dims", run_configs(ds, splits, configs, opts), opts);
}

std::size_t best_config(std::span<const SweepRow> rows) {
    if (rows.empty()) throw DomainError("best_config: empty sweep result");
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& a = rows[i].report;
        const auto& b = rows[best].report;
        bool better = false;
        if (a.mean_rmse != b.mean_rmse) {
            better = a.mean_rmse < b.mean_rmse;
        } else if (a.mean_ncc != b.mean_ncc) {
            better = a.mean_ncc > b.mean_ncc;
        } else {
            better = rows[i].config.str() < rows[best].config.str();
        }
        if (better) best = i;
    }
    return best;
}

std::size_t best_config(const SweepResult& r) { return best_config(r.rows); }

nlohmann::ordered_json to_json(const SweepRow& r) {
    ordered_json folds = ordered_json::array();
    for (const auto& f : r.folds)
        folds.push_back({{"fold", f.fold}, {"best_epoch", f.best_epoch}, {"val", to_json(f.val)},
                         {"test", to_json(f.test)}});
    return {{"config", to_json(r.config)}, {"report", metrics::to_json(r.report)}, {"folds", folds}};
}

SweepRow sweep_row_from_json(const nlohmann::json& j) {
    SweepRow r;
    r.config = config_id_from_json(j.at("config"));
    r.report = metrics::metric_report_from_json(j.at("report"));
    for (const auto& f : j.at("folds"))
        r.folds.push_back({f.at("fold").get<int>(), f.at("best_epoch").get<int>(), partition_from_json(f.at("val")),
                           partition_from_json(f.at("test"))});
    return r;
}

nlohmann::ordered_json to_json(const SweepResult& r) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) rows.push_back(to_json(row));
    ordered_json j{{"kind", r.kind}, {"provenance", r.provenance}};
    j["best"] = r.rows.empty() ? ordered_json() : ordered_json(r.rows[best_config(r)].config.str());
    j["rows"] = std::move(rows);
    return j;
}

SweepResult sweep_result_from_json(const nlohmann::json& j) {
    SweepResult r;
    r.kind = j.at("kind").get<std::string>();
    r.provenance = j.at("provenance");
    for (const auto& row : j.at("rows")) r.rows.push_back(sweep_row_from_json(row));
    return r;
}

std::string format_table(const SweepResult& r) {
    std::ostringstream os;
    const auto best = r.rows.empty() ? r.rows.size() : best_config(r);
    std::size_t folds = 0;
    for (const auto& row : r.rows) folds = std::max(folds, row.report.folds.size());

    char buf[256];
    std::snprintf(buf, sizeof buf, "  %-10s %-7s %-6s %6s", "sfm", "arch", "layers", "dim");
    os << buf;
    for (std::size_t f = 0; f < folds; ++f) {
        std::snprintf(buf, sizeof buf, " %9s", ("rmse.f" + std::to_string(f)).c_str());
        os << buf;
    }
    os << "      rmse     ncc\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        std::snprintf(buf, sizeof buf, "%c %-10s %-7s %-6s %6zu", i == best ? '*' : ' ', row.config.sfm.c_str(),
                      heads::to_string(row.config.arch).c_str(), heads::to_string(row.config.layers).c_str(),
                      row.config.dim);
        os << buf;
        for (std::size_t f = 0; f < folds; ++f) {
            if (f < row.report.folds.size())
                std::snprintf(buf, sizeof buf, " %9.3f", row.report.folds[f].rmse);
            else
                std::snprintf(buf, sizeof buf, " %9s", "-");
            os << buf;
        }
        std::snprintf(buf, sizeof buf, " %9.3f %7.3f\n", row.report.mean_rmse, row.report.mean_ncc);
        os << buf;
    }
    return os.str();
}

}  // namespace siphi::sweep
