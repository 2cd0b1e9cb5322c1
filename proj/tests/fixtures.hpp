#pragma once

#include <cmath>
#include <vector>

#include "siphi/data/feature_file.hpp"
#include "siphi/data/manifest.hpp"
#include "siphi/data/registry.hpp"
#include "siphi/data/splits.hpp"
#include "siphi/data/synth.hpp"
#include "siphi/gradcheck.hpp"
#include "siphi/heads.hpp"
#include "siphi/rng.hpp"

namespace fixture {

inline siphi::data::LayerFeatureTensor features(std::uint32_t L, std::uint32_t T, std::uint32_t C, siphi::Rng& rng) {
    siphi::data::LayerFeatureTensor t(L, T, C);
    for (auto& v : t.values()) v = static_cast<float>(rng.uniform(-2, 2));
    return t;
}

inline siphi::data::Audiogram audiogram(std::size_t F, siphi::Rng& rng) {
    siphi::data::Audiogram a;
    for (std::size_t i = 0; i < F; ++i) {
        a.left.push_back(std::round(rng.uniform(-10, 120)));
        a.right.push_back(std::round(rng.uniform(-10, 120)));
    }
    return a;
}

inline siphi::data::SfmDescriptor sfm(int L, int C) { return {"toy", L, C, std::nullopt}; }

// Moves every parameter off its structured init (zero output weights, unit
// gammas, equal logits) so forward and gradient checks see all paths.
inline void perturb(siphi::heads::HeadParams& p, siphi::Rng& rng, double scale = 0.3) {
    for (const auto& name : p.params.names())
        for (auto& v : p.params.mutable_value(name).values()) v += scale * rng.uniform(-1, 1);
}

inline siphi::heads::HeadConfig config(siphi::heads::Arch arch, std::size_t d, std::uint64_t seed,
                                       siphi::heads::LayerMode layers = siphi::heads::LayerMode::all()) {
    siphi::heads::HeadConfig c;
    c.arch = arch;
    c.layers = layers;
    c.embed_dim = d;
    c.seed = seed;
    return c;
}

// Max relative gradient error of the head output w.r.t. every parameter.
inline double head_grad_error(const siphi::heads::HeadParams& p, const siphi::heads::HeadInput& in) {
    const auto fn = [&](siphi::ad::Graph& g, const siphi::ad::VarMap& v) {
        return siphi::heads::head_graph(g, in, v, p.config, p.dims);
    };
    return siphi::grad_check(fn, p.params).max_rel_error;
}

// In-memory synthetic dataset (first view) with its splits.
struct SmallData {
    siphi::data::Dataset ds;
    siphi::data::FoldSplit splits;
};

inline SmallData small_data(std::size_t samples, std::uint32_t L, std::uint32_t T, std::uint32_t C,
                            std::uint64_t seed, double noise = 1.0) {
    siphi::data::SynthSpec spec;
    spec.samples = samples;
    spec.layers = L;
    spec.frames = T;
    spec.channels = C;
    spec.noise_sd = noise;
    spec.seed = seed;
    spec.views = {siphi::data::SynthView{"toy", static_cast<int>(L) - 1, 0.0}};
    auto synth = siphi::data::synth_dataset(spec);
    SmallData out{{synth.manifests[0], synth.features[0]}, {}};
    out.splits = siphi::data::make_splits(out.ds.manifest.samples, seed);
    return out;
}

}  // namespace fixture
