#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "siphi/errors.hpp"
#include "siphi/nn.hpp"

using namespace siphi;
using heads::Arch;
using heads::LayerMode;

namespace {

struct Case {
    heads::HeadParams p;
    data::LayerFeatureTensor x;
    data::Audiogram a;
};

Case make_case(Arch arch, LayerMode mode, std::uint64_t seed, std::uint32_t L = 3, std::uint32_t T = 45,
               std::uint32_t C = 8, std::size_t d = 16) {
    Rng rng(seed);
    auto p = heads::init_head(fixture::config(arch, d, seed, mode), fixture::sfm(L, C));
    fixture::perturb(p, rng);
    return {p, fixture::features(L, T, C, rng), fixture::audiogram(8, rng)};
}

double run(const Case& c) { return heads::forward(heads::prepare_input(c.x, c.a, c.p.config, c.p.dims), c.p); }

// Ear-averaged projected audiogram, the extra fusion item every head carries.
Tensor audiogram_item(const heads::HeadParams& p, const std::vector<double>& thresholds) {
    const auto& W = p.params.get("proj.audiogram.weight");
    const auto& b = p.params.get("proj.audiogram.bias");
    Tensor out = b;
    for (std::size_t j = 0; j < W.cols(); ++j)
        for (std::size_t i = 0; i < W.rows(); ++i) out[j] += thresholds[i] / 100.0 * W(i, j);
    return out;
}

Tensor project(const Tensor& x, const Tensor& W, const Tensor& b) {
    Tensor out = Tensor::matrix(x.rows(), W.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t j = 0; j < W.cols(); ++j) {
            double s = b[j];
            for (std::size_t i = 0; i < W.rows(); ++i) s += x(r, i) * W(i, j);
            out(r, j) = s;
        }
    return out;
}

}  // namespace

TEST_SUITE("heads") {

TEST_CASE("init: uniform fusion, deterministic, predicts 50") {
    const auto cfg = fixture::config(Arch::wa_tgp, 8, 5, LayerMode::single(1));
    const auto p = heads::init_head(cfg, fixture::sfm(3, 4));
    const auto w = heads::fusion_weights(p);
    CHECK(w.size() == 2);
    CHECK(w[0] == 0.5);
    CHECK(w[1] == 0.5);
    CHECK(heads::init_head(cfg, fixture::sfm(3, 4)).params.hash() == p.params.hash());
    Rng rng(1);
    for (auto arch : {Arch::wa_tgp, Arch::wa_tt, Arch::dt}) {
        const auto q = heads::init_head(fixture::config(arch, 8, 5), fixture::sfm(3, 4));
        CHECK(heads::forward(heads::prepare_input(fixture::features(3, 30, 4, rng), fixture::audiogram(8, rng),
                                                  q.config, q.dims),
                             q) == 50.0);
    }
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(heads::init_head(fixture::config(Arch::wa_tgp, 8, 1, LayerMode::single(3)), fixture::sfm(3, 4)),
                    ConfigError);
    CHECK_THROWS_AS(heads::init_head(fixture::config(Arch::dt, 10, 1), fixture::sfm(3, 4)), ConfigError);
    auto cfg = fixture::config(Arch::wa_tt, 8, 1);
    cfg.pool_factor = 0;
    CHECK_THROWS_AS(heads::init_head(cfg, fixture::sfm(3, 4)), ConfigError);
    CHECK_THROWS_AS(heads::layer_mode_from_string("x1"), ConfigError);
    CHECK(heads::to_string(heads::layer_mode_from_string("12")) == "12");
    CHECK(heads::arch_from_string("wa-tt") == Arch::wa_tt);
}

TEST_CASE("parameter layout per arch") {
    const auto tgp = heads::init_head(fixture::config(Arch::wa_tgp, 8, 1), fixture::sfm(3, 4));
    const auto dt = heads::init_head(fixture::config(Arch::dt, 8, 1), fixture::sfm(3, 4));
    CHECK(tgp.params.contains("fusion.logits"));
    CHECK_FALSE(tgp.params.contains("temporal.block0.attn.wq"));
    CHECK_FALSE(dt.params.contains("fusion.logits"));
    CHECK(dt.params.contains("layerwise.block1.ff.w2"));
    CHECK(dt.params.get("proj.layer2.weight").shape() == std::vector<std::size_t>{4, 8});
    CHECK(dt.params.get("out.bias").item() == 50.0);
}

TEST_CASE("WA-TGP single layer against a scalar brute-force evaluation") {
    // d = 1, C = 2, single layer 1, hand-set weights.
    auto p = heads::init_head(fixture::config(Arch::wa_tgp, 1, 1, LayerMode::single(1)), fixture::sfm(2, 2), 2);
    p.params.set("proj.layer1.weight", Tensor({2, 1}, std::vector<double>{0.5, -1.0}));
    p.params.set("proj.layer1.bias", Tensor::scalar(0.25));
    p.params.set("proj.audiogram.weight", Tensor({2, 1}, std::vector<double>{2.0, 1.0}));
    p.params.set("proj.audiogram.bias", Tensor::scalar(-0.5));
    p.params.set("fusion.logits", Tensor::row({std::log(3.0), 0.0}));
    p.params.set("out.weight", Tensor::scalar(4.0));
    p.params.set("out.bias", Tensor::scalar(10.0));

    data::LayerFeatureTensor x(2, 2, 2, {0, 0, 0, 0, 1, 2, 3, 4,    // left: layer 0, layer 1
                                         0, 0, 0, 0, 5, 6, 7, 8});  // right
    const data::Audiogram a{{10, 20}, {30, 40}};
    double ears = 0;
    const double layer_mean[2][2] = {{2, 3}, {6, 7}};
    const double thr[2][2] = {{0.1, 0.2}, {0.3, 0.4}};
    for (int e = 0; e < 2; ++e) {
        const double feat = 0.5 * layer_mean[e][0] - 1.0 * layer_mean[e][1] + 0.25;
        const double aud = 2.0 * thr[e][0] + 1.0 * thr[e][1] - 0.5;
        ears += 0.75 * feat + 0.25 * aud;
    }
    const double expected = 4.0 * (ears / 2) + 10.0;
    CHECK(heads::forward_wa_tgp(x, a, p) == doctest::Approx(expected).epsilon(1e-14));
    CHECK_THROWS_AS(heads::forward_dt(x, a, p), ConfigError);
}

TEST_CASE("WA-TGP depends on the ears only through their average") {
    auto c = make_case(Arch::wa_tgp, LayerMode::all(), 3);
    // multiples of 1/64 keep the float ear averages exact
    for (auto& v : c.x.values()) v = std::round(v * 64.0f) / 64.0f;
    const double original = run(c);
    auto avg = c;
    for (std::size_t l = 0; l < c.x.layers(); ++l)
        for (std::size_t f = 0; f < c.x.frames(); ++f)
            for (std::size_t ch = 0; ch < c.x.channels(); ++ch) {
                const float m = 0.5f * (c.x.at(0, l, f, ch) + c.x.at(1, l, f, ch));
                avg.x.at(0, l, f, ch) = avg.x.at(1, l, f, ch) = m;
            }
    for (std::size_t i = 0; i < c.a.left.size(); ++i)
        avg.a.left[i] = avg.a.right[i] = 0.5 * (c.a.left[i] + c.a.right[i]);
    CHECK(std::fabs(run(avg) - original) < 1e-10);
}

TEST_CASE("ear swap symmetry") {
    for (auto arch : {Arch::wa_tgp, Arch::wa_tt, Arch::dt}) {
        for (std::uint64_t s = 0; s < 5; ++s) {
            auto c = make_case(arch, LayerMode::all(), 100 + s);
            auto swapped = c;
            swapped.x = c.x.swapped_ears();
            swapped.a = c.a.swapped();
            CHECK(std::fabs(run(c) - run(swapped)) < 1e-10);
        }
    }
}

TEST_CASE("fusion weights are convex and shift invariant") {
    auto c = make_case(Arch::wa_tgp, LayerMode::all(), 7);
    // dyadic logits so that logit + shift is exact
    c.p.params.set("fusion.logits", Tensor::row({0.5, -1.25, 2.0, 0.75}));
    const auto w = heads::fusion_weights(c.p);
    double sum = 0;
    for (double v : w.values()) {
        CHECK(v > 0);
        sum += v;
    }
    CHECK(std::fabs(sum - 1) < 1e-12);
    const double before = run(c);
    c.p.params.set("fusion.logits", Tensor::row({3.5, 1.75, 5.0, 3.75}));
    CHECK(run(c) == before);
}

TEST_CASE("all layers with logit mass on k matches Single(k)") {
    for (int k = 0; k < 3; ++k) {
        auto single = make_case(Arch::wa_tgp, LayerMode::single(k), 20 + k);
        single.p.params.set("fusion.logits", Tensor::row({0.0, 0.0}));
        auto all = heads::init_head(fixture::config(Arch::wa_tgp, 16, 1), fixture::sfm(3, 8));
        for (const auto& name : single.p.params.names())
            if (name != "fusion.logits") all.params.set(name, single.p.params.get(name));
        std::vector<double> logits(4, -50.0);
        logits[static_cast<std::size_t>(k)] = 0.0;
        logits[3] = 0.0;
        all.params.set("fusion.logits", Tensor::row(logits));
        const auto via_all = heads::forward(heads::prepare_input(single.x, single.a, all.config, all.dims), all);
        CHECK(std::fabs(via_all - run(single)) < 1e-6);
    }
}

TEST_CASE("WA-TT with one pooled frame equals composed numerics ops") {
    // T <= pool_factor: one token per layer.
    auto c = make_case(Arch::wa_tt, LayerMode::all(), 30, 3, 12, 8, 16);
    const auto& P = c.p.params;
    const nn::TransformerShape shape{16, 4, 4};
    const auto w = heads::fusion_weights(c.p);
    Tensor joint = Tensor::matrix(1, 16);
    for (std::size_t ear = 0; ear < 2; ++ear) {
        std::vector<Tensor> items;
        for (std::size_t l = 0; l < 3; ++l) {
            const auto name = "proj.layer" + std::to_string(l);
            auto tok = project(nn::global_mean_pool(c.x.layer_matrix(ear, l)), P.get(name + ".weight"),
                               P.get(name + ".bias"));
            for (int b = 0; b < 2; ++b)
                tok = nn::transformer_block_forward(tok, P, "temporal.block" + std::to_string(b), shape);
            items.push_back(tok);
        }
        items.push_back(audiogram_item(c.p, ear == 0 ? c.a.left : c.a.right));
        for (std::size_t i = 0; i < items.size(); ++i)
            for (std::size_t j = 0; j < 16; ++j) joint[j] += 0.5 * w[i] * items[i][j];
    }
    double expected = P.get("out.bias").item();
    for (std::size_t j = 0; j < 16; ++j) expected += joint[j] * P.get("out.weight")[j];
    CHECK(run(c) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("DT single layer runs the layer-wise transformer on two tokens") {
    auto c = make_case(Arch::dt, LayerMode::single(2), 31, 3, 45, 8, 16);
    const auto& P = c.p.params;
    const nn::TransformerShape shape{16, 4, 4};
    Tensor joint = Tensor::matrix(1, 16);
    for (std::size_t ear = 0; ear < 2; ++ear) {
        auto toks = project(nn::temporal_pool(c.x.layer_matrix(ear, 2), 20), P.get("proj.layer2.weight"),
                            P.get("proj.layer2.bias"));
        for (int b = 0; b < 2; ++b)
            toks = nn::transformer_block_forward(toks, P, "temporal.block" + std::to_string(b), shape);
        const auto layer_tok = nn::global_mean_pool(toks);
        const auto aud = audiogram_item(c.p, ear == 0 ? c.a.left : c.a.right);
        Tensor seq = Tensor::matrix(2, 16);
        for (std::size_t j = 0; j < 16; ++j) {
            seq(0, j) = layer_tok[j];
            seq(1, j) = aud[j];
        }
        for (int b = 0; b < 2; ++b)
            seq = nn::transformer_block_forward(seq, P, "layerwise.block" + std::to_string(b), shape);
        const auto pooled = nn::global_mean_pool(seq);
        for (std::size_t j = 0; j < 16; ++j) joint[j] += 0.5 * pooled[j];
    }
    double expected = P.get("out.bias").item();
    for (std::size_t j = 0; j < 16; ++j) expected += joint[j] * P.get("out.weight")[j];
    CHECK(run(c) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("DT is invariant to the order of layer tokens") {
    auto c = make_case(Arch::dt, LayerMode::all(), 32);
    const double before = run(c);
    // relabel layers 0 -> 2 -> 1 -> 0 in both the features and their projections
    const std::size_t perm[] = {2, 0, 1};
    auto moved = c;
    for (std::size_t ear = 0; ear < 2; ++ear)
        for (std::size_t l = 0; l < 3; ++l)
            for (std::size_t f = 0; f < c.x.frames(); ++f)
                for (std::size_t ch = 0; ch < c.x.channels(); ++ch)
                    moved.x.at(ear, perm[l], f, ch) = c.x.at(ear, l, f, ch);
    for (std::size_t l = 0; l < 3; ++l)
        for (const char* part : {".weight", ".bias"})
            moved.p.params.set("proj.layer" + std::to_string(perm[l]) + part,
                               c.p.params.get("proj.layer" + std::to_string(l) + part));
    CHECK(run(moved) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("gradients of every head pass the finite-difference check") {
    for (auto arch : {Arch::wa_tgp, Arch::wa_tt, Arch::dt}) {
        auto c = make_case(arch, LayerMode::all(), 40, 2, 25, 4, 8);
        const auto in = heads::prepare_input(c.x, c.a, c.p.config, c.p.dims);
        const auto fn = [&](ad::Graph& g, const ad::VarMap& v) { return heads::head_graph(g, in, v, c.p.config, c.p.dims); };
        const auto r = grad_check(fn, c.p.params);
        INFO(heads::to_string(arch), " ", r.worst_param, "[", r.worst_index, "] analytic ", r.analytic, " numeric ", r.numeric);
        CHECK(r.max_rel_error < 1e-4);
    }
}

TEST_CASE("batch forward") {
    Rng rng(50);
    auto p = heads::init_head(fixture::config(Arch::wa_tt, 8, 2), fixture::sfm(2, 4));
    fixture::perturb(p, rng);
    std::vector<data::LayerFeatureTensor> xs;
    std::vector<data::Audiogram> as;
    for (int i = 0; i < 6; ++i) {
        xs.push_back(fixture::features(2, 30, 4, rng));
        as.push_back(fixture::audiogram(8, rng));
    }
    const auto batch = heads::head_forward(xs, as, p);
    REQUIRE(batch.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(std::fabs(batch[i] - heads::forward_wa_tt(xs[i], as[i], p)) <= 1e-12);
    CHECK(heads::head_forward(std::span(xs.data(), 1), std::span(as.data(), 1), p)[0] == heads::forward_wa_tt(xs[0], as[0], p));
    CHECK(heads::head_forward(std::span(xs.data(), 0), std::span(as.data(), 0), p).empty());
    CHECK(heads::head_forward(xs, as, p, kernels::Exec::serial) == batch);
    xs[3] = fixture::features(2, 30, 5, rng);
    CHECK_THROWS_AS(heads::head_forward(xs, as, p), ShapeError);
}

}
