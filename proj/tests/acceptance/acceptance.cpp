// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   siphi_acceptance --cli <path to siphi> --work <scratch dir> [--only name,...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "siphi/data/feature_file.hpp"
#include "siphi/data/splits.hpp"
#include "siphi/data/synth.hpp"
#include "siphi/ensemble.hpp"
#include "siphi/heads.hpp"
#include "siphi/metrics.hpp"
#include "siphi/optim.hpp"
#include "siphi/sweep.hpp"
#include "siphi/trainer.hpp"

using namespace siphi;
using heads::Arch;
using heads::LayerMode;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Options {
    fs::path cli;
    fs::path work;
};

const Arch kArchs[] = {Arch::wa_tgp, Arch::wa_tt, Arch::dt};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct HeadCase {
    heads::HeadParams p;
    data::LayerFeatureTensor x;
    data::Audiogram a;
};

HeadCase random_head(Arch arch, LayerMode mode, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "acceptance-head"));
    auto p = heads::init_head(fixture::config(arch, 16, seed, mode), fixture::sfm(3, 8));
    fixture::perturb(p, rng);
    return {p, fixture::features(3, 45, 8, rng), fixture::audiogram(8, rng)};
}

double forward(const HeadCase& c) { return heads::forward(heads::prepare_input(c.x, c.a, c.p.config, c.p.dims), c.p); }

// --- criteria ---

Outcome gradient_correctness(const Options&) {
    double worst = 0;
    std::string where;
    for (auto arch : kArchs)
        for (std::uint64_t s = 0; s < 5; ++s) {
            const auto c = random_head(arch, LayerMode::all(), 1000 + s);
            const auto in = heads::prepare_input(c.x, c.a, c.p.config, c.p.dims);
            const auto fn = [&](ad::Graph& g, const ad::VarMap& v) {
                return heads::head_graph(g, in, v, c.p.config, c.p.dims);
            };
            const auto r = grad_check(fn, c.p.params);
            if (r.max_rel_error >= worst) {
                worst = r.max_rel_error;
                where = heads::to_string(arch) + " " + r.worst_param;
            }
        }
    return {worst < 1e-4, "max relative error " + fmt("%.2e", worst) + " (" + where + ")"};
}

Outcome planted_layer(const Options&) {
    int hits = 0;
    double worst_gap = -1e300;
    std::ostringstream picks;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        data::SynthSpec spec;
        spec.seed = seed;
        auto synth = data::synth_dataset(spec);
        const data::Dataset ds{synth.manifests[0], synth.features[0]};
        const auto splits = data::make_splits(ds.manifest.samples, seed);
        sweep::SweepOptions opts;
        opts.head = fixture::config(Arch::wa_tgp, 16, 1);
        opts.recipe = train::desk_recipe(Arch::wa_tgp);
        opts.seed = seed;
        const auto res = sweep::layer_sweep(ds, splits, Arch::wa_tgp, opts);
        const auto& best = res.rows[sweep::best_config(res)].config.layers;
        if (best == LayerMode::single(spec.views[0].informative_layer)) ++hits;
        picks << (seed > 1 ? "," : "") << heads::to_string(best);
        double best_single = 1e300, all = 0;
        for (const auto& r : res.rows) {
            if (r.config.layers.is_all())
                all = r.report.mean_rmse;
            else
                best_single = std::min(best_single, r.report.mean_rmse);
        }
        worst_gap = std::max(worst_gap, best_single - all);
    }
    return {hits >= 9 && worst_gap <= 0.5, std::to_string(hits) + "/10 seeds pick layer 4 [" + picks.str() +
                                               "], all-layers gain at most " + fmt("%.3f", worst_gap) + " RMSE"};
}

train::TrainRecipe overfit_recipe(Arch arch) {
    auto r = train::desk_recipe(arch);
    r.set_epochs(200);
    r.batch_size = 32;
    // full-batch steps: 200 updates in total, so the transformer heads need a hotter peak rate
    if (arch != Arch::wa_tgp) r.schedule.base_lr = 5e-2;
    return r;
}

Outcome overfit(const Options&) {
    bool ok = true;
    std::ostringstream detail;
    for (auto arch : kArchs) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto data = fixture::small_data(32, 3, 40, 8, 5, 0.0);
        const auto cfg = fixture::config(arch, 16, 2);
        const heads::HeadDims dims{3, 8, 8};
        std::vector<std::string> ids;
        for (const auto& s : data.ds.manifest.samples) ids.push_back(s.sample_id);
        const auto ex = train::prepare_examples(data.ds, ids, cfg, dims);
        const auto res = train::train(cfg, dims, overfit_recipe(arch), ex, ex);
        const double rmse = res.record.epochs[static_cast<std::size_t>(res.record.best_epoch)].val_rmse;
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ok = ok && rmse < 2.0 && secs < 120;
        detail << heads::to_string(arch) << " " << fmt("%.3f", rmse) << " (" << fmt("%.1f", secs) << "s) ";
    }
    return {ok, "train RMSE " + detail.str()};
}

Outcome metric_oracles(const Options&) {
    Rng rng(77);
    double worst_rmse = 0, worst_ncc = 0, worst_rho = 0;
    bool ranks_exact = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = 2 + rng.index(199);
        std::vector<double> a(n), b(n);
        const bool ties = trial % 2 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = ties ? std::round(rng.uniform(0, 10)) : rng.uniform(-100, 100);
            b[i] = rng.uniform(0, 100);
        }
        if (std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; })) a[0] += 1;
        worst_rmse = std::max(worst_rmse, std::fabs(metrics::rmse(a, b) - oracle::rmse(a, b)));
        worst_ncc = std::max(worst_ncc, std::fabs(metrics::ncc(a, b) - oracle::pearson(a, b)));
        const auto ra = oracle::ranks(a), rb = oracle::ranks(b);
        ranks_exact = ranks_exact && metrics::average_ranks(a) == ra && metrics::average_ranks(b) == rb;
        worst_rho = std::max(worst_rho, std::fabs(metrics::spearman(a, b) - oracle::pearson(ra, rb)));
    }
    return {worst_rmse < 1e-9 && worst_ncc < 1e-9 && ranks_exact && worst_rho < 1e-12,
            "max |diff| rmse " + fmt("%.1e", worst_rmse) + ", ncc " + fmt("%.1e", worst_ncc) + ", spearman " +
                fmt("%.1e", worst_rho) + (ranks_exact ? ", ranks identical" : ", ranks differ")};
}

Outcome recipe_fidelity(const Options&) {
    struct Point {
        Arch arch;
        int epoch;
        double lr;
    };
    const Point points[] = {{Arch::wa_tgp, 0, 1e-4}, {Arch::wa_tgp, 50, 1e-6}, {Arch::wa_tt, 0, 3e-6},
                            {Arch::wa_tt, 10, 3e-5}, {Arch::wa_tt, 50, 1e-6}, {Arch::dt, 0, 3e-6},
                            {Arch::dt, 10, 3e-5},    {Arch::dt, 50, 1e-6}};
    double worst = 0;
    for (const auto& pt : points) {
        const double got = optim::lr_at(train::default_recipe(pt.arch).schedule, pt.epoch);
        worst = std::max(worst, std::fabs(got - pt.lr) / pt.lr);
    }
    return {worst < 1e-12, "max relative deviation " + fmt("%.1e", worst) + " over 8 schedule points"};
}

Outcome ensemble_contracts(const Options&) {
    const auto combos = ensemble::enumerate_combinations(5, 3);
    double worst_sum = 0, worst_val_excess = -1e300;
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(derive_seed(seed, "ensemble-acceptance"));
        const std::size_t n = 200;
        std::vector<double> y_val(n), y_test(n);
        for (auto& v : y_val) v = rng.uniform(0, 100);
        for (auto& v : y_test) v = rng.uniform(0, 100);
        auto make = [&](const std::vector<double>& y) {
            ensemble::MemberPredictions p;
            for (int m = 0; m < 5; ++m) {
                p.members.push_back("m" + std::to_string(m));
                std::vector<double> row(n);
                for (std::size_t i = 0; i < n; ++i) row[i] = y[i] + 10.0 * rng.normal();
                p.pred.push_back(row);
            }
            for (std::size_t i = 0; i < n; ++i) p.sample_ids.push_back(std::to_string(i));
            return p;
        };
        const auto val = make(y_val), test = make(y_test);
        for (const auto& c : combos) {
            const auto v = val.select(c), t = test.select(c);
            const auto model = ensemble::fit_ensemble(v, y_val);
            const auto w = model.weights();
            double sum = 0;
            for (double x : w) sum += x;
            worst_sum = std::max(worst_sum, std::fabs(sum - 1));
            double best_member_val = 1e300;
            for (const auto& row : v.pred) best_member_val = std::min(best_member_val, oracle::rmse(row, y_val));
            worst_val_excess = std::max(worst_val_excess,
                                        oracle::rmse(ensemble::ensemble_predict(model, v), y_val) - best_member_val);
            if (&c == &combos.front()) {
                double member_mean = 0;
                for (const auto& row : t.pred) member_mean += oracle::rmse(row, y_test) / 3.0;
                if (oracle::rmse(ensemble::ensemble_predict(model, t), y_test) < 0.75 * member_mean) ++wins;
            }
        }
    }
    return {combos.size() == 10 && worst_sum < 1e-12 && wins >= 9 && worst_val_excess <= 0.1,
            std::to_string(combos.size()) + " combinations, |sum w - 1| <= " + fmt("%.1e", worst_sum) + ", " +
                std::to_string(wins) + "/10 seeds beat 0.75x member RMSE, val excess over best member <= " +
                fmt("%.3f", worst_val_excess)};
}

Outcome architecture_invariants(const Options&) {
    double swap = 0;
    for (auto arch : kArchs)
        for (std::uint64_t s = 0; s < 100; ++s) {
            auto c = random_head(arch, LayerMode::all(), 2000 + s);
            auto sw = c;
            sw.x = c.x.swapped_ears();
            sw.a = c.a.swapped();
            swap = std::max(swap, std::fabs(forward(c) - forward(sw)));
        }

    bool shift_exact = true;
    for (auto arch : {Arch::wa_tgp, Arch::wa_tt})
        for (std::uint64_t s = 0; s < 20; ++s) {
            auto c = random_head(arch, LayerMode::all(), 3000 + s);
            Rng rng(s);
            // dyadic logits and integer shifts keep logit - max exact
            std::vector<double> logits(4);
            for (auto& v : logits) v = std::round(rng.uniform(-3, 3) * 64) / 64;
            c.p.params.set("fusion.logits", Tensor::row(logits));
            const double before = forward(c);
            const double shift = std::round(rng.uniform(-20, 20));
            for (auto& v : logits) v += shift;
            c.p.params.set("fusion.logits", Tensor::row(logits));
            shift_exact = shift_exact && forward(c) == before;
        }

    double mass = 0;
    for (int k = 0; k < 3; ++k)
        for (std::uint64_t s = 0; s < 10; ++s) {
            auto single = random_head(Arch::wa_tgp, LayerMode::single(k), 4000 + s);
            single.p.params.set("fusion.logits", Tensor::row({0.0, 0.0}));
            auto all = heads::init_head(fixture::config(Arch::wa_tgp, 16, s), fixture::sfm(3, 8));
            for (const auto& name : single.p.params.names())
                if (name != "fusion.logits") all.params.set(name, single.p.params.get(name));
            std::vector<double> logits(4, -50.0);
            logits[static_cast<std::size_t>(k)] = 0.0;
            logits[3] = 0.0;
            all.params.set("fusion.logits", Tensor::row(logits));
            HeadCase via_all{all, single.x, single.a};
            mass = std::max(mass, std::fabs(forward(via_all) - forward(single)));
        }
    return {swap < 1e-10 && shift_exact && mass < 1e-6,
            "ear swap " + fmt("%.1e", swap) + ", shift " + (shift_exact ? "bit-exact" : "NOT exact") +
                ", all vs single " + fmt("%.1e", mass)};
}

std::map<std::string, std::vector<std::byte>> snapshot(const fs::path& root) {
    std::map<std::string, std::vector<std::byte>> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().extension() == ".json")
            files[fs::relative(e.path(), root).generic_string()] = data::read_file_bytes(e.path());
    return files;
}

bool run_pipeline(const Options& o, const fs::path& w) {
    const std::string cli = "\"" + o.cli.string() + "\" ";
    const std::string out = w.string();
    std::vector<std::string> cmds = {
        "synth --seed 17 --out " + out + "/data --samples 60 --layers 3 --frames 20 --channels 4 --informative 1"
        " --views A,B,C --view-noise 0.3",
        "split --seed 17 --manifest " + out + "/data/A/manifest.json --out " + out + "/split"};
    std::string inputs;
    for (const char* v : {"A", "B", "C"}) {
        cmds.push_back("sweep-layers --seed 17 --manifest " + out + "/data/" + v + "/manifest.json --splits " + out +
                       "/split/splits.json --out " + out + "/sweep/" + v +
                       " --arch wa-tgp --arch dt --dim 8 --epochs 3 --recipe desk --workers 2");
        inputs += " " + out + "/sweep/" + v + "/layers-wa-tgp.json " + out + "/sweep/" + v + "/layers-dt.json";
    }
    cmds.push_back("ensemble --seed 17 --k 2 --out " + out + "/ens --inputs" + inputs);
    cmds.push_back("report --seed 17 --ensemble " + out + "/ens/ensemble.json --out " + out + "/report --inputs" + inputs);
    fs::create_directories(w);
    for (const auto& c : cmds)
        if (std::system((cli + c + " >> \"" + (w / "log.txt").string() + "\" 2>&1").c_str()) != 0) {
            std::fprintf(stderr, "pipeline step failed: %s\n", c.c_str());
            return false;
        }
    return true;
}

Outcome determinism(const Options& o) {
    if (o.cli.empty()) return {false, "no --cli binary given"};
    // The command line is part of every artifact, so both runs use the same directory.
    const auto w = o.work / "pipeline";
    fs::remove_all(w);
    if (!run_pipeline(o, w)) return {false, "first run failed, see " + (w / "log.txt").string()};
    const auto first = snapshot(w);
    fs::remove_all(w);
    if (!run_pipeline(o, w)) return {false, "second run failed, see " + (w / "log.txt").string()};
    const auto second = snapshot(w);
    std::size_t differing = 0;
    for (const auto& [path, bytes] : first) {
        const auto it = second.find(path);
        if (it == second.end() || it->second != bytes) ++differing;
    }
    differing += second.size() > first.size() ? second.size() - first.size() : 0;
    return {differing == 0 && first.size() > 10,
            std::to_string(first.size()) + " JSON artifacts, " + std::to_string(differing) + " differ"};
}

Outcome split_safety(const Options&) {
    Rng rng(123);
    std::size_t overlaps = 0, lost = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto listeners = 3 + rng.index(38);
        std::vector<data::Sample> samples;
        std::map<std::string, std::string> listener_of;
        for (std::size_t l = 0; l < listeners; ++l) {
            const auto name = "L" + std::to_string(rng.index(1000000)) + "_" + std::to_string(l);
            const auto count = 1 + rng.index(6);
            for (std::size_t i = 0; i < count; ++i) {
                data::Sample s;
                s.sample_id = name + "/" + std::to_string(i);
                s.listener_id = name;
                listener_of[s.sample_id] = name;
                samples.push_back(s);
            }
        }
        rng.shuffle(samples);
        const auto split = data::make_splits(samples, rng.next());
        for (const auto& f : split.folds) {
            std::map<std::string, int> where;
            std::size_t assigned = 0;
            int part = 0;
            for (const auto* ids : {&f.train, &f.val, &f.test}) {
                for (const auto& id : *ids) {
                    auto [it, fresh] = where.emplace(listener_of.at(id), part);
                    if (!fresh && it->second != part) ++overlaps;
                }
                assigned += ids->size();
                ++part;
            }
            if (assigned != samples.size()) ++lost;
        }
    }
    return {overlaps == 0 && lost == 0, "10000 manifests, " + std::to_string(overlaps) + " listener overlaps, " +
                                            std::to_string(lost) + " folds with missing samples"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"siphi acceptance gate"};
    Options opts;
    std::vector<std::string> only;
    app.add_option("--cli", opts.cli, "siphi executable for the pipeline check");
    app.add_option("--work", opts.work, "scratch directory")->required();
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(opts.work);

    const std::vector<std::pair<std::string, std::function<Outcome(const Options&)>>> criteria = {
        {"gradient-correctness", gradient_correctness},
        {"planted-layer-recovery", planted_layer},
        {"overfit-sanity", overfit},
        {"metric-oracles", metric_oracles},
        {"recipe-fidelity", recipe_fidelity},
        {"ensemble-contracts", ensemble_contracts},
        {"architecture-invariants", architecture_invariants},
        {"determinism", determinism},
        {"split-safety", split_safety},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = fn(opts);
        } catch (const std::exception& ex) {
            r = {false, std::string("threw: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %-24s %s [%.1fs]\n", r.pass ? "PASS" : "FAIL", name.c_str(), r.detail.c_str(), secs);
        std::fflush(stdout);
        if (!r.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
