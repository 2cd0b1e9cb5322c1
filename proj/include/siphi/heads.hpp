#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "siphi/autodiff.hpp"
#include "siphi/data/feature_file.hpp"
#include "siphi/data/manifest.hpp"
#include "siphi/kernels.hpp"
#include "siphi/params.hpp"

namespace siphi::heads {

// WA_TGP: per-layer projection + global average pooling, softmax-weighted fusion.
// WA_TT:  per-layer projection + factor pooling + temporal transformer, softmax-weighted fusion.
// DT:     same temporal path, then a layer-wise transformer over [layers..., audiogram] tokens.
enum class Arch { wa_tgp, wa_tt, dt };

std::string to_string(Arch a);
Arch arch_from_string(const std::string& s);

// Single(k) or All encoder layers.
class LayerMode {
public:
    static LayerMode all() { return LayerMode(); }
    static LayerMode single(int layer) { return LayerMode(layer); }

    bool is_all() const { return !layer_; }
    int layer() const { return layer_.value(); }

    bool operator==(const LayerMode&) const = default;

private:
    LayerMode() = default;
    explicit LayerMode(int layer) : layer_(layer) {}
    std::optional<int> layer_;
};

// "all" or the decimal layer index.
std::string to_string(const LayerMode& m);
LayerMode layer_mode_from_string(const std::string& s);

struct HeadConfig {
    Arch arch = Arch::wa_tgp;
    LayerMode layers = LayerMode::all();
    std::size_t embed_dim = 384;
    std::size_t pool_factor = 20;
    std::size_t depth = 2;
    std::size_t heads = 4;
    std::size_t ff_mult = 4;
    bool positional = false;
    std::uint64_t seed = 17;

    bool operator==(const HeadConfig&) const = default;
};

inline const std::array<std::size_t, 4> kDimensionGrid = {192, 384, 768, 1536};

struct HeadDims {
    int layers = 0;
    int channels = 0;
    std::size_t audiogram_bins = 8;

    bool operator==(const HeadDims&) const = default;
};

struct HeadParams {
    HeadConfig config;
    HeadDims dims;
    ParamSet params;
};

nlohmann::ordered_json to_json(const HeadConfig& c);
HeadConfig head_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const HeadDims& d);
HeadDims head_dims_from_json(const nlohmann::json& j);

// Absolute layer indices the config reads; throws ConfigError if Single(k) has k outside [0, L).
std::vector<int> selected_layers(const HeadConfig& cfg, int total_layers);
// Selected layers plus the audiogram item.
std::size_t fusion_item_count(const HeadConfig& cfg, int total_layers);

// Deterministic init from cfg.seed. Fusion logits start at zero, the output
// layer starts with zero weights and bias 50 so a fresh head predicts mid-scale.
HeadParams init_head(const HeadConfig& cfg, const data::SfmDescriptor& sfm, std::size_t audiogram_bins = 8);

// Softmax-normalised fusion weights (WA archs): [selected layers..., audiogram].
Tensor fusion_weights(const HeadParams& p);

// Features reduced to what the head consumes, per ear:
//   WA_TGP: each selected layer's frame mean, [1 x C]
//   WA_TT, DT: each selected layer pooled by pool_factor, [ceil(T/f) x C]
// Window means commute with the affine channel projection, so pooling ahead of
// the projection gives the same result for a fraction of the work.
// The audiogram is carried in units of 100 dB HL.
struct EarInput {
    std::vector<Tensor> layers;
    Tensor audiogram;
};

struct HeadInput {
    std::array<EarInput, data::kEars> ears;
};

HeadInput prepare_input(const data::LayerFeatureTensor& x, const data::Audiogram& a, const HeadConfig& cfg,
                        const HeadDims& dims);

// Builds the scalar prediction ([1 x 1]) on g.
ad::Var head_graph(ad::Graph& g, const HeadInput& in, const ad::VarMap& vars, const HeadConfig& cfg,
                   const HeadDims& dims);

double forward(const HeadInput& in, const HeadParams& p);

double forward_wa_tgp(const data::LayerFeatureTensor& x, const data::Audiogram& a, const HeadParams& p);
double forward_wa_tt(const data::LayerFeatureTensor& x, const data::Audiogram& a, const HeadParams& p);
double forward_dt(const data::LayerFeatureTensor& x, const data::Audiogram& a, const HeadParams& p);

// Order-preserving batch evaluation; samples fan out over OpenMP threads when exec is parallel.
std::vector<double> head_forward(std::span<const HeadInput> batch, const HeadParams& p,
                                 kernels::Exec exec = kernels::Exec::parallel);
std::vector<double> head_forward(std::span<const data::LayerFeatureTensor> features,
                                 std::span<const data::Audiogram> audiograms, const HeadParams& p,
                                 kernels::Exec exec = kernels::Exec::parallel);

}  // namespace siphi::heads
