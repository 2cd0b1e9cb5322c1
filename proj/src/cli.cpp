#include "siphi/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "siphi/checkpoint.hpp"
#include "siphi/data/registry.hpp"
#include "siphi/data/splits.hpp"
#include "siphi/data/synth.hpp"
#include "siphi/ensemble.hpp"
#include "siphi/errors.hpp"
#include "siphi/rng.hpp"
#include "siphi/metrics.hpp"
#include "siphi/sweep.hpp"
#include "siphi/trainer.hpp"

namespace siphi::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct UsageError : Error {
    using Error::Error;
};

std::shared_ptr<spdlog::logger> logger() {
    if (auto l = spdlog::get("siphi")) return l;
    auto l = spdlog::stderr_color_mt("siphi");
    l->set_pattern("siphi: %l: %v");
    return l;
}

void configure_logging() {
    auto level = spdlog::level::info;
    if (const char* env = std::getenv("SIPHI_LOG_LEVEL")) {
        level = spdlog::level::from_str(env);
        // from_str maps unknown names to off
        if (level == spdlog::level::off && std::string(env) != "off") level = spdlog::level::info;
    }
    logger()->set_level(level);
}

struct Context {
    std::string command;
    std::uint64_t seed = 17;
    fs::path out;
};

ordered_json provenance(const Context& ctx, std::uint64_t input_hash) {
    return {{"command", ctx.command}, {"seed", ctx.seed}, {"input_hash", hex64(input_hash)}};
}

void write_json(const fs::path& path, const ordered_json& j) {
    data::write_text_file(path, j.dump(2) + "\n");
    logger()->info("wrote {}", path.string());
}

std::uint64_t file_hash(const fs::path& path, std::uint64_t state = 0xcbf29ce484222325ULL) {
    return fnv1a64(data::read_file_bytes(path), state);
}

ordered_json number_or_null(double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json();
}

// --- recipe flags shared by train and the sweeps ---

struct RecipeFlags {
    std::string kind = "paper";
    std::optional<int> epochs;
    std::optional<double> lr;
    std::optional<std::size_t> batch_size;

    void attach(CLI::App* app) {
        app->add_option("--recipe", kind, "paper (published schedule) or desk (synthetic-scale schedule)")
            ->check(CLI::IsMember({"paper", "desk"}))
            ->capture_default_str();
        app->add_option("--epochs", epochs, "override epoch count")->check(CLI::PositiveNumber);
        app->add_option("--lr", lr, "override base learning rate")->check(CLI::PositiveNumber);
        app->add_option("--batch-size", batch_size, "override batch size")->check(CLI::PositiveNumber);
    }

    train::TrainRecipe build(heads::Arch arch) const {
        auto r = kind == "desk" ? train::desk_recipe(arch) : train::default_recipe(arch);
        if (epochs) r.set_epochs(*epochs);
        if (lr) r.schedule.base_lr = *lr;
        if (batch_size) r.batch_size = *batch_size;
        try {
            r.validate();
        } catch (const ConfigError& ex) {
            throw UsageError(ex.what());
        }
        return r;
    }
};

data::FoldSplit load_or_make_splits(const data::Dataset& ds, const std::string& splits_path, std::uint64_t seed) {
    if (!splits_path.empty()) return data::load_splits(splits_path);
    return data::make_splits(ds.manifest.samples, seed);
}

std::uint64_t inputs_hash(const fs::path& manifest, const std::string& splits_path) {
    auto h = data::dataset_hash(manifest);
    if (!splits_path.empty()) h = file_hash(splits_path, h);
    return h;
}

heads::LayerMode parse_layer(const std::string& s) {
    try {
        return heads::layer_mode_from_string(s);
    } catch (const Error& ex) {
        throw UsageError(std::string("--layer: ") + ex.what());
    }
}

// --- synth ---

struct SynthArgs {
    data::SynthSpec spec;
    std::vector<std::string> views;
    int informative = 4;
    double view_noise = 0.0;
};

void cmd_synth(const Context& ctx, SynthArgs a) {
    a.spec.seed = ctx.seed;
    a.spec.views.clear();
    if (a.views.empty()) a.views = {"synthetic"};
    for (const auto& v : a.views) a.spec.views.push_back({v, a.informative, a.view_noise});
    if (a.informative < 0 || a.informative >= static_cast<int>(a.spec.layers))
        throw UsageError("--informative must name a layer below --layers");
    const auto paths = data::write_synth_dataset(a.spec, ctx.out);
    std::uint64_t h = fnv1a64(std::string_view("synth"));
    std::vector<std::string> rel;
    for (const auto& p : paths) {
        h = data::dataset_hash(p) ^ splitmix64(h);
        rel.push_back(fs::relative(p, ctx.out).generic_string());
    }
    ordered_json j{{"provenance", provenance(ctx, h)},
                   {"samples", a.spec.samples},
                   {"layers", a.spec.layers},
                   {"frames", a.spec.frames},
                   {"channels", a.spec.channels},
                   {"noise_sd", a.spec.noise_sd},
                   {"informative_layer", a.informative},
                   {"view_noise", a.view_noise},
                   {"manifests", rel}};
    write_json(ctx.out / "synth.json", j);
}

// --- split ---

void cmd_split(const Context& ctx, const fs::path& manifest) {
    const auto m = data::load_manifest(manifest);
    const auto s = data::make_splits(m.samples, ctx.seed);
    auto j = data::to_json(s);
    j["provenance"] = provenance(ctx, data::dataset_hash(manifest));
    write_json(ctx.out / "splits.json", j);
}

// --- train ---

struct TrainArgs {
    fs::path manifest;
    std::string splits;
    std::string arch = "wa-tgp";
    std::size_t dim = 384;
    std::string layer = "all";
    int fold = 0;
    RecipeFlags recipe;
};

void cmd_train(const Context& ctx, const TrainArgs& a) {
    const auto arch = heads::arch_from_string(a.arch);
    const auto recipe_base = a.recipe.build(arch);
    const auto layers = parse_layer(a.layer);
    const auto ds = data::load_dataset(a.manifest);
    const auto splits = load_or_make_splits(ds, a.splits, ctx.seed);
    const auto& f = splits.folds.at(static_cast<std::size_t>(a.fold));

    heads::HeadConfig cfg;
    cfg.arch = arch;
    cfg.layers = layers;
    cfg.embed_dim = a.dim;
    const sweep::ConfigId id{ds.manifest.sfm.name, arch, layers, a.dim};
    const auto seed = sweep::run_seed(ctx.seed, id, a.fold);
    cfg.seed = derive_seed(seed, "init");
    auto recipe = recipe_base;
    recipe.seed = derive_seed(seed, "shuffle");

    const heads::HeadDims dims{ds.manifest.sfm.layers, ds.manifest.sfm.channels,
                               ds.manifest.audiogram_frequencies.size()};
    heads::selected_layers(cfg, dims.layers);
    const auto train_set = train::prepare_examples(ds, f.train, cfg, dims);
    const auto val_set = train::prepare_examples(ds, f.val, cfg, dims);
    logger()->info("train {} fold {}: {} train / {} val samples", id.str(), a.fold, train_set.size(), val_set.size());
    const auto result = train::train(cfg, dims, recipe, train_set, val_set, ctx.out / "head.ckpt");

    auto record = train::to_json(result.record);
    record["checkpoint"] = "head.ckpt";
    ordered_json j{{"provenance", provenance(ctx, inputs_hash(a.manifest, a.splits))},
                   {"config", sweep::to_json(id)},
                   {"fold", a.fold},
                   {"head", heads::to_json(cfg)},
                   {"recipe", train::to_json(recipe)},
                   {"record", record}};
    write_json(ctx.out / "run.json", j);
}

// --- sweeps ---

struct SweepArgs {
    std::string spec_path;
    std::string manifest;
    std::string splits;
    std::vector<std::string> archs;
    std::size_t dim = 384;
    std::vector<std::size_t> dims;
    std::vector<int> folds;
    std::string layer;
    std::string layers_from;
    int workers = 1;
    RecipeFlags recipe;
};

// Values from a sweep spec file fill every flag not given on the command line.
void apply_spec(SweepArgs& a, CLI::App* app, Context& ctx) {
    if (a.spec_path.empty()) return;
    nlohmann::json spec;
    try {
        std::ifstream in(a.spec_path);
        spec = nlohmann::json::parse(in);
    } catch (const std::exception& ex) {
        throw UsageError("--spec: " + std::string(ex.what()));
    }
    auto unset = [&](const char* flag) { return app->count(flag) == 0; };
    try {
        if (unset("--manifest") && spec.contains("manifest")) {
            const fs::path base = fs::path(a.spec_path).parent_path();
            a.manifest = (base / spec.at("manifest").get<std::string>()).string();
        }
        if (unset("--splits") && spec.contains("splits")) {
            const fs::path base = fs::path(a.spec_path).parent_path();
            a.splits = (base / spec.at("splits").get<std::string>()).string();
        }
        if (unset("--arch") && spec.contains("archs")) a.archs = spec.at("archs").get<std::vector<std::string>>();
        if (unset("--dims") && spec.contains("dims")) a.dims = spec.at("dims").get<std::vector<std::size_t>>();
        if (unset("--dim") && spec.contains("dim")) a.dim = spec.at("dim").get<std::size_t>();
        if (unset("--folds") && spec.contains("folds")) a.folds = spec.at("folds").get<std::vector<int>>();
        if (unset("--seed") && spec.contains("seed")) ctx.seed = spec.at("seed").get<std::uint64_t>();
        if (unset("--workers") && spec.contains("workers")) a.workers = spec.at("workers").get<int>();
        if (unset("--recipe") && spec.contains("recipe")) a.recipe.kind = spec.at("recipe").get<std::string>();
        if (unset("--epochs") && spec.contains("epochs")) a.recipe.epochs = spec.at("epochs").get<int>();
    } catch (const nlohmann::json::exception& ex) {
        throw UsageError("--spec: " + std::string(ex.what()));
    }
}

void check_sweep_args(const SweepArgs& a) {
    if (a.manifest.empty()) throw UsageError("--manifest is required");
    if (!fs::is_regular_file(a.manifest)) throw UsageError("--manifest: no such file '" + a.manifest + "'");
    if (!a.splits.empty() && !fs::is_regular_file(a.splits))
        throw UsageError("--splits: no such file '" + a.splits + "'");
    if (a.workers < 1) throw UsageError("--workers must be >= 1");
    if (a.recipe.kind != "paper" && a.recipe.kind != "desk") throw UsageError("--recipe must be paper or desk");
    for (int f : a.folds)
        if (f < 0 || f >= static_cast<int>(data::kFolds)) throw UsageError("--folds: index out of range");
    for (const auto& s : a.archs) {
        try {
            heads::arch_from_string(s);
        } catch (const Error&) {
            throw UsageError("--arch: unknown head '" + s + "'");
        }
    }
}

sweep::SweepOptions sweep_options(const Context& ctx, const SweepArgs& a, heads::Arch arch) {
    sweep::SweepOptions o;
    o.head.embed_dim = a.dim;
    o.recipe = a.recipe.build(arch);
    o.seed = ctx.seed;
    if (!a.folds.empty()) o.folds = a.folds;
    o.workers = a.workers;
    o.run_dir = ctx.out / "runs";
    return o;
}

void emit_sweep(const Context& ctx, const sweep::SweepResult& r, std::uint64_t hash, const std::string& stem) {
    auto j = sweep::to_json(r);
    ordered_json doc{{"provenance", provenance(ctx, hash)}};
    for (auto& [k, v] : j.items()) {
        if (k == "provenance")
            for (auto& [pk, pv] : v.items()) doc["provenance"][pk] = pv;
        else
            doc[k] = v;
    }
    write_json(ctx.out / (stem + ".json"), doc);
    data::write_text_file(ctx.out / (stem + ".txt"), sweep::format_table(r));
    std::fputs(sweep::format_table(r).c_str(), stdout);
}

void cmd_sweep_layers(const Context& ctx, const SweepArgs& a) {
    auto archs = a.archs.empty() ? std::vector<std::string>{"wa-tgp"} : a.archs;
    for (const auto& s : archs) {
        const auto arch = heads::arch_from_string(s);
        sweep_options(ctx, a, arch);  // surfaces flag errors before any data is read
    }
    const auto ds = data::load_dataset(a.manifest);
    const auto splits = load_or_make_splits(ds, a.splits, ctx.seed);
    const auto hash = inputs_hash(a.manifest, a.splits);
    for (const auto& s : archs) {
        const auto arch = heads::arch_from_string(s);
        logger()->info("layer sweep {} over {} ({} layers)", s, ds.manifest.sfm.name, ds.manifest.sfm.layers);
        const auto r = sweep::layer_sweep(ds, splits, arch, sweep_options(ctx, a, arch));
        emit_sweep(ctx, r, hash, "layers-" + s);
    }
}

heads::LayerMode layer_from_sweep(const std::string& path, heads::Arch arch) {
    std::ifstream in(path);
    const auto r = sweep::sweep_result_from_json(nlohmann::json::parse(in));
    // WA-TT reuses the WA-TGP layer choice.
    const auto want = arch == heads::Arch::wa_tt ? heads::Arch::wa_tgp : arch;
    std::vector<sweep::SweepRow> rows;
    for (const auto& row : r.rows)
        if (row.config.arch == want) rows.push_back(row);
    if (rows.empty())
        throw UsageError("--layers-from: '" + path + "' has no " + heads::to_string(want) + " rows");
    return rows[sweep::best_config(rows)].config.layers;
}

void cmd_sweep_dims(const Context& ctx, SweepArgs a) {
    if (a.layer.empty() == a.layers_from.empty()) throw UsageError("give exactly one of --layer or --layers-from");
    if (!a.layers_from.empty() && !fs::is_regular_file(a.layers_from))
        throw UsageError("--layers-from: no such file '" + a.layers_from + "'");
    auto archs = a.archs.empty() ? std::vector<std::string>{"wa-tgp"} : a.archs;
    std::vector<std::size_t> grid = a.dims;
    if (grid.empty()) grid.assign(heads::kDimensionGrid.begin(), heads::kDimensionGrid.end());
    std::vector<heads::LayerMode> modes;
    for (const auto& s : archs) {
        const auto arch = heads::arch_from_string(s);
        sweep_options(ctx, a, arch);
        modes.push_back(a.layer.empty() ? layer_from_sweep(a.layers_from, arch) : parse_layer(a.layer));
    }
    const auto ds = data::load_dataset(a.manifest);
    const auto splits = load_or_make_splits(ds, a.splits, ctx.seed);
    auto hash = inputs_hash(a.manifest, a.splits);
    if (!a.layers_from.empty()) hash = file_hash(a.layers_from, hash);
    for (std::size_t i = 0; i < archs.size(); ++i) {
        const auto arch = heads::arch_from_string(archs[i]);
        logger()->info("dimension sweep {} at layers {}", archs[i], heads::to_string(modes[i]));
        const auto r = sweep::dim_sweep(ds, splits, arch, modes[i], grid, sweep_options(ctx, a, arch));
        emit_sweep(ctx, r, hash, "dims-" + archs[i]);
    }
}

// --- eval ---

struct EvalArgs {
    fs::path manifest;
    fs::path checkpoint;
    std::string splits;
    int fold = 0;
    std::string partition = "test";
};

void cmd_eval(const Context& ctx, const EvalArgs& a) {
    const auto head = heads::load_checkpoint(a.checkpoint);
    const auto ds = data::load_dataset(a.manifest);
    const heads::HeadDims dims{ds.manifest.sfm.layers, ds.manifest.sfm.channels,
                               ds.manifest.audiogram_frequencies.size()};
    if (dims != head.dims) throw ConfigError("checkpoint geometry does not match the manifest's SFM");
    const auto splits = load_or_make_splits(ds, a.splits, ctx.seed);
    const auto& f = splits.folds.at(static_cast<std::size_t>(a.fold));
    const auto& ids = a.partition == "train" ? f.train : a.partition == "val" ? f.val : f.test;
    const auto set = train::prepare_examples(ds, ids, head.config, dims);
    const auto pred = train::predict(head, set);
    std::vector<double> target;
    for (const auto& e : set) target.push_back(e.target);
    double ncc = std::numeric_limits<double>::quiet_NaN();
    try {
        ncc = metrics::ncc(pred, target);
    } catch (const DomainError&) {
    }
    ordered_json j{{"provenance", provenance(ctx, file_hash(a.checkpoint, inputs_hash(a.manifest, a.splits)))},
                   {"head", heads::to_json(head.config)},
                   {"fold", a.fold},
                   {"partition", a.partition},
                   {"rmse", metrics::rmse(pred, target)},
                   {"ncc", number_or_null(ncc)},
                   {"predictions", {{"ids", ids}, {"pred", pred}, {"target", target}}}};
    write_json(ctx.out / "eval.json", j);
}

// --- ensemble ---

struct Member {
    std::string name;
    sweep::SweepRow row;
};

std::vector<Member> best_members(const std::vector<std::string>& inputs, std::uint64_t& hash) {
    std::map<std::string, std::vector<sweep::SweepRow>> by_sfm;
    for (const auto& path : inputs) {
        hash = file_hash(path, hash);
        std::ifstream in(path);
        auto r = sweep::sweep_result_from_json(nlohmann::json::parse(in));
        for (auto& row : r.rows) by_sfm[row.config.sfm].push_back(std::move(row));
    }
    std::vector<Member> out;
    for (auto& [name, rows] : by_sfm) out.push_back({name, rows[sweep::best_config(rows)]});
    return out;
}

ensemble::MemberPredictions member_predictions(const std::vector<const Member*>& members, std::size_t fold_slot,
                                               bool test) {
    std::vector<std::string> names;
    std::vector<std::map<std::string, double>> scores;
    for (const auto* m : members) {
        if (fold_slot >= m->row.folds.size()) throw AlignmentError("member '" + m->name + "' lacks a fold");
        const auto& p = test ? m->row.folds[fold_slot].test : m->row.folds[fold_slot].val;
        names.push_back(m->name);
        auto& s = scores.emplace_back();
        for (std::size_t i = 0; i < p.ids.size(); ++i) s[p.ids[i]] = p.pred[i];
    }
    const auto& first = members.front()->row.folds[fold_slot];
    return ensemble::align_members(names, scores, test ? first.test.ids : first.val.ids);
}

struct ComboResult {
    std::vector<std::string> members;
    metrics::MetricReport report;
    std::vector<ensemble::EnsembleModel> models;  // per fold
    std::vector<double> val_rmse;
};

std::string format_ensemble_table(const std::vector<ComboResult>& combos, const std::vector<ensemble::WeightStats>& ws) {
    std::ostringstream os;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%4s  %-40s %9s %7s\n", "rank", "members", "rmse", "ncc");
    os << buf;
    for (std::size_t i = 0; i < combos.size(); ++i) {
        std::string names;
        for (const auto& m : combos[i].members) names += (names.empty() ? "" : ", ") + m;
        std::snprintf(buf, sizeof buf, "%4zu  %-40s %9.3f %7.3f\n", i + 1, ("(" + names + ")").c_str(),
                      combos[i].report.mean_rmse, combos[i].report.mean_ncc);
        os << buf;
    }
    os << "\nweights\n";
    std::snprintf(buf, sizeof buf, "  %-12s %5s %7s %7s %7s %7s %7s\n", "member", "n", "min", "q1", "median", "q3",
                  "max");
    os << buf;
    for (const auto& s : ws) {
        std::snprintf(buf, sizeof buf, "  %-12s %5zu %7.3f %7.3f %7.3f %7.3f %7.3f\n", s.member.c_str(), s.count, s.min,
                      s.q1, s.median, s.q3, s.max);
        os << buf;
    }
    return os.str();
}

void cmd_ensemble(const Context& ctx, const std::vector<std::string>& inputs, std::size_t k,
                  const ensemble::FitOptions& fit) {
    std::uint64_t hash = fnv1a64(std::string_view("ensemble"));
    const auto members = best_members(inputs, hash);
    if (k > members.size())
        throw UsageError("--k " + std::to_string(k) + " exceeds the " + std::to_string(members.size()) +
                         " members found in --inputs");
    const auto folds = members.front().row.folds.size();
    for (const auto& m : members)
        if (m.row.folds.size() != folds) throw AlignmentError("members were swept over different folds");

    std::vector<ComboResult> combos;
    std::vector<ensemble::EnsembleModel> all_models;
    for (const auto& c : ensemble::enumerate_combinations(members.size(), k)) {
        std::vector<const Member*> chosen;
        ComboResult res;
        for (auto i : c) {
            chosen.push_back(&members[i]);
            res.members.push_back(members[i].name);
        }
        std::vector<metrics::FoldPredictions> fold_preds;
        for (std::size_t f = 0; f < folds; ++f) {
            const auto val = member_predictions(chosen, f, false);
            const auto test = member_predictions(chosen, f, true);
            const auto model = ensemble::fit_ensemble(val, chosen.front()->row.folds[f].val.target, fit);
            res.val_rmse.push_back(metrics::rmse(ensemble::ensemble_predict(model, val),
                                                 chosen.front()->row.folds[f].val.target));
            fold_preds.push_back({ensemble::ensemble_predict(model, test), chosen.front()->row.folds[f].test.target});
            res.models.push_back(model);
            all_models.push_back(model);
        }
        std::string id;
        for (const auto& m : res.members) id += (id.empty() ? "" : "+") + m;
        res.report = metrics::fold_report(fold_preds, id);
        combos.push_back(std::move(res));
    }
    std::stable_sort(combos.begin(), combos.end(), [](const ComboResult& a, const ComboResult& b) {
        if (a.report.mean_rmse != b.report.mean_rmse) return a.report.mean_rmse < b.report.mean_rmse;
        if (a.report.mean_ncc != b.report.mean_ncc) return a.report.mean_ncc > b.report.mean_ncc;
        return a.report.config_id < b.report.config_id;
    });

    std::vector<ensemble::WeightStats> ws;
    for (const auto& m : members) ws.push_back(ensemble::weight_distribution(all_models, m.name));

    ordered_json j{{"provenance", provenance(ctx, hash)},
                   {"k", k},
                   {"fit", {{"lr", fit.lr}, {"steps", fit.steps}, {"huber_delta", fit.huber_delta}}}};
    auto& jm = j["members"] = ordered_json::array();
    for (const auto& m : members)
        jm.push_back({{"sfm", m.name}, {"config", sweep::to_json(m.row.config)}, {"report", metrics::to_json(m.row.report)}});
    auto& jc = j["combinations"] = ordered_json::array();
    for (std::size_t i = 0; i < combos.size(); ++i) {
        ordered_json models = ordered_json::array();
        for (const auto& m : combos[i].models) models.push_back(ensemble::to_json(m));
        jc.push_back({{"rank", i + 1},
                      {"members", combos[i].members},
                      {"report", metrics::to_json(combos[i].report)},
                      {"val_rmse", combos[i].val_rmse},
                      {"models", models}});
    }
    auto& jw = j["weights"] = ordered_json::array();
    for (const auto& s : ws) jw.push_back(ensemble::to_json(s));
    write_json(ctx.out / "ensemble.json", j);
    const auto table = format_ensemble_table(combos, ws);
    data::write_text_file(ctx.out / "ensemble.txt", table);
    std::fputs(table.c_str(), stdout);
}

// --- report ---

double arch_year(const std::string& date) {
    try {
        return std::stod(date);
    } catch (const std::exception&) {
        throw ConfigError("registry: bad architecture date '" + date + "'");
    }
}

void cmd_report(const Context& ctx, const std::vector<std::string>& inputs, const std::string& ensemble_path) {
    std::uint64_t hash = fnv1a64(std::string_view("report"));
    auto members = best_members(inputs, hash);
    std::stable_sort(members.begin(), members.end(), [](const Member& a, const Member& b) {
        if (a.row.report.mean_rmse != b.row.report.mean_rmse) return a.row.report.mean_rmse < b.row.report.mean_rmse;
        if (a.row.report.mean_ncc != b.row.report.mean_ncc) return a.row.report.mean_ncc > b.row.report.mean_ncc;
        return a.name < b.name;
    });

    std::ostringstream txt;
    char buf[512];
    ordered_json j{{"provenance", provenance(ctx, ensemble_path.empty() ? hash : file_hash(ensemble_path, hash))}};
    auto& best = j["best_configurations"] = ordered_json::array();
    txt << "best configuration per SFM\n";
    std::snprintf(buf, sizeof buf, "%4s  %-10s %-7s %-6s %6s %9s %7s\n", "rank", "sfm", "arch", "layers", "dim", "rmse",
                  "ncc");
    txt << buf;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto& m = members[i];
        best.push_back({{"rank", i + 1}, {"config", sweep::to_json(m.row.config)}, {"report", metrics::to_json(m.row.report)}});
        std::snprintf(buf, sizeof buf, "%4zu  %-10s %-7s %-6s %6zu %9.3f %7.3f\n", i + 1, m.name.c_str(),
                      heads::to_string(m.row.config.arch).c_str(), heads::to_string(m.row.config.layers).c_str(),
                      m.row.config.dim, m.row.report.mean_rmse, m.row.report.mean_ncc);
        txt << buf;
    }

    // Rank correlation between registry attributes and performance rank (1 = lowest RMSE).
    std::vector<const Member*> known;
    for (const auto& m : members) {
        const auto& reg = data::sfm_registry();
        const auto it = std::find_if(reg.begin(), reg.end(), [&](const auto& d) { return d.name == m.name; });
        if (it != reg.end() && it->attributes) known.push_back(&m);
    }
    ordered_json corr = ordered_json::array();
    if (known.size() >= 2) {
        std::vector<double> perf;
        for (const auto* m : known) perf.push_back(m->row.report.mean_rmse);
        const auto perf_rank = metrics::average_ranks(perf);
        const std::vector<std::pair<std::string, std::function<double(const data::SfmAttributes&)>>> attrs = {
            {"asr_wer", [](const auto& a) { return a.asr_wer; }},
            {"data_hours", [](const auto& a) { return a.data_hours; }},
            {"arch_date", [](const auto& a) { return arch_year(a.arch_date); }},
            {"train_task_count", [](const auto& a) { return static_cast<double>(a.train_task_count); }},
        };
        txt << "\nattribute rank vs performance rank (ascending values, rank 1 = lowest RMSE)\n";
        for (const auto& [name, get] : attrs) {
            std::vector<double> values;
            for (const auto* m : known) values.push_back(get(*data::find_sfm(m->name).attributes));
            const auto ranks = metrics::average_ranks(values);
            double rho = std::numeric_limits<double>::quiet_NaN();
            try {
                rho = metrics::rank_correlation(ranks, perf_rank);
            } catch (const DomainError&) {
            }
            corr.push_back({{"attribute", name}, {"values", values}, {"ranks", ranks}, {"spearman", number_or_null(rho)}});
            if (std::isfinite(rho))
                std::snprintf(buf, sizeof buf, "  %-18s %7.3f\n", name.c_str(), rho);
            else
                std::snprintf(buf, sizeof buf, "  %-18s %7s\n", name.c_str(), "n/a");
            txt << buf;
        }
        ordered_json sfms = ordered_json::array();
        for (const auto* m : known) sfms.push_back(m->name);
        j["attribute_correlation"] = {{"sfms", sfms}, {"performance_ranks", perf_rank}, {"attributes", corr}};
    } else {
        j["attribute_correlation"] = nullptr;
    }

    if (!ensemble_path.empty()) {
        std::ifstream in(ensemble_path);
        const auto e = nlohmann::json::parse(in);
        ordered_json top = ordered_json::array();
        txt << "\nensembles\n";
        for (const auto& c : e.at("combinations")) {
            top.push_back({{"rank", c.at("rank")}, {"members", c.at("members")}, {"report", c.at("report")}});
            std::string names;
            for (const auto& m : c.at("members")) names += (names.empty() ? "" : ", ") + m.get<std::string>();
            std::snprintf(buf, sizeof buf, "%4d  %-40s %9.3f %7.3f\n", c.at("rank").get<int>(), ("(" + names + ")").c_str(),
                          c.at("report").at("mean_rmse").get<double>(), c.at("report").at("mean_ncc").get<double>());
            txt << buf;
        }
        j["ensembles"] = top;
        j["weights"] = e.at("weights");
    }
    write_json(ctx.out / "report.json", j);
    data::write_text_file(ctx.out / "report.txt", txt.str());
    std::fputs(txt.str().c_str(), stdout);
}

std::string join_command(const std::vector<std::string>& args) {
    std::string s = "siphi";
    for (std::size_t i = 1; i < args.size(); ++i) s += " " + args[i];
    return s;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    configure_logging();
    Context ctx;
    ctx.command = join_command(args);

    CLI::App app{"Prediction heads on frozen speech-model features", "siphi"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto common = [&](CLI::App* sub, bool seeded = true) {
        sub->add_option("--out", ctx.out, "output directory")->required();
        if (seeded) sub->add_option("--seed", ctx.seed, "global seed")->capture_default_str();
    };

    SynthArgs synth;
    auto* s_synth = app.add_subcommand("synth", "write a synthetic dataset with a planted informative layer");
    common(s_synth);
    s_synth->add_option("--samples", synth.spec.samples)->check(CLI::Range(3, 1000000))->capture_default_str();
    s_synth->add_option("--layers", synth.spec.layers)->check(CLI::PositiveNumber)->capture_default_str();
    s_synth->add_option("--frames", synth.spec.frames)->check(CLI::PositiveNumber)->capture_default_str();
    s_synth->add_option("--channels", synth.spec.channels)->check(CLI::PositiveNumber)->capture_default_str();
    s_synth->add_option("--listeners", synth.spec.listeners)->check(CLI::Range(3, 100000))->capture_default_str();
    s_synth->add_option("--noise", synth.spec.noise_sd, "score noise sd")->check(CLI::NonNegativeNumber)->capture_default_str();
    s_synth->add_option("--informative", synth.informative, "planted layer")->capture_default_str();
    s_synth->add_option("--views", synth.views, "one SFM name per view")->delimiter(',');
    s_synth->add_option("--view-noise", synth.view_noise)->check(CLI::NonNegativeNumber)->capture_default_str();

    fs::path split_manifest;
    auto* s_split = app.add_subcommand("split", "listener-disjoint three-fold split");
    common(s_split);
    s_split->add_option("--manifest", split_manifest)->required()->check(CLI::ExistingFile);

    TrainArgs tr;
    auto* s_train = app.add_subcommand("train", "train one head on one fold");
    common(s_train);
    s_train->add_option("--manifest", tr.manifest)->required()->check(CLI::ExistingFile);
    s_train->add_option("--splits", tr.splits)->check(CLI::ExistingFile);
    s_train->add_option("--arch", tr.arch)->check(CLI::IsMember({"wa-tgp", "wa-tt", "dt"}))->capture_default_str();
    s_train->add_option("--dim", tr.dim)->check(CLI::PositiveNumber)->capture_default_str();
    s_train->add_option("--layer", tr.layer, "all or a layer index")->capture_default_str();
    s_train->add_option("--fold", tr.fold)->check(CLI::Range(0, 2))->capture_default_str();
    tr.recipe.attach(s_train);

    auto sweep_common = [&](CLI::App* sub, SweepArgs& a) {
        common(sub);
        sub->add_option("--spec", a.spec_path, "sweep spec JSON")->check(CLI::ExistingFile);
        sub->add_option("--manifest", a.manifest);
        sub->add_option("--splits", a.splits);
        sub->add_option("--arch", a.archs, "head architectures")->check(CLI::IsMember({"wa-tgp", "wa-tt", "dt"}));
        sub->add_option("--folds", a.folds, "fold indices")->delimiter(',');
        sub->add_option("--workers", a.workers, "concurrent runs")->envname("SIPHI_WORKERS")->capture_default_str();
        a.recipe.attach(sub);
    };

    SweepArgs sl;
    auto* s_layers = app.add_subcommand("sweep-layers", "every single layer plus all-layer fusion, per fold");
    sweep_common(s_layers, sl);
    s_layers->add_option("--dim", sl.dim)->check(CLI::PositiveNumber)->capture_default_str();

    SweepArgs sd;
    auto* s_dims = app.add_subcommand("sweep-dims", "embedding-dimension grid at a fixed layer mode");
    sweep_common(s_dims, sd);
    s_dims->add_option("--dims", sd.dims, "dimension grid")->delimiter(',');
    s_dims->add_option("--layer", sd.layer, "all or a layer index");
    s_dims->add_option("--layers-from", sd.layers_from, "take the best layer mode from a layer sweep");

    EvalArgs ev;
    auto* s_eval = app.add_subcommand("eval", "score a checkpoint on one partition");
    common(s_eval);
    s_eval->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
    s_eval->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
    s_eval->add_option("--splits", ev.splits)->check(CLI::ExistingFile);
    s_eval->add_option("--fold", ev.fold)->check(CLI::Range(0, 2))->capture_default_str();
    s_eval->add_option("--partition", ev.partition)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();

    std::vector<std::string> ens_inputs;
    std::size_t ens_k = 3;
    ensemble::FitOptions fit;
    auto* s_ens = app.add_subcommand("ensemble", "fit weighted ensembles of k members' best configurations");
    common(s_ens);
    s_ens->add_option("--inputs", ens_inputs, "sweep result files")->required()->check(CLI::ExistingFile);
    s_ens->add_option("--k", ens_k)->check(CLI::PositiveNumber)->capture_default_str();
    s_ens->add_option("--lr", fit.lr)->check(CLI::PositiveNumber)->capture_default_str();
    s_ens->add_option("--steps", fit.steps)->check(CLI::NonNegativeNumber)->capture_default_str();

    std::vector<std::string> rep_inputs;
    std::string rep_ensemble;
    auto* s_rep = app.add_subcommand("report", "best configurations, attribute correlation, ensembles");
    common(s_rep);
    s_rep->add_option("--inputs", rep_inputs, "sweep result files")->required()->check(CLI::ExistingFile);
    s_rep->add_option("--ensemble", rep_ensemble, "ensemble.json")->check(CLI::ExistingFile);

    std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(argv_rest.begin(), argv_rest.end());
    try {
        app.parse(argv_rest);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        SweepArgs* sweep_args = s_layers->parsed() ? &sl : s_dims->parsed() ? &sd : nullptr;
        if (sweep_args) {
            apply_spec(*sweep_args, s_layers->parsed() ? s_layers : s_dims, ctx);
            check_sweep_args(*sweep_args);
        }
        logger()->info("{} (seed {})", ctx.command, ctx.seed);
        if (s_synth->parsed()) cmd_synth(ctx, synth);
        else if (s_split->parsed()) cmd_split(ctx, split_manifest);
        else if (s_train->parsed()) cmd_train(ctx, tr);
        else if (s_layers->parsed()) cmd_sweep_layers(ctx, sl);
        else if (s_dims->parsed()) cmd_sweep_dims(ctx, sd);
        else if (s_eval->parsed()) cmd_eval(ctx, ev);
        else if (s_ens->parsed()) cmd_ensemble(ctx, ens_inputs, ens_k, fit);
        else if (s_rep->parsed()) cmd_report(ctx, rep_inputs, rep_ensemble);
    } catch (const UsageError& ex) {
        logger()->error("{}", ex.what());
        return kExitUsage;
    } catch (const std::exception& ex) {
        logger()->error("{}", ex.what());
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace siphi::cli
