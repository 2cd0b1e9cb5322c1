#include "siphi/heads.hpp"

#include <cstdint>
#include <exception>

#include "siphi/errors.hpp"
#include "siphi/nn.hpp"
#include "siphi/rng.hpp"

namespace siphi::heads {

std::string to_string(Arch a) {
    switch (a) {
        case Arch::wa_tgp: return "wa-tgp";
        case Arch::wa_tt: return "wa-tt";
        case Arch::dt: return "dt";
    }
    return "?";
}

Arch arch_from_string(const std::string& s) {
    if (s == "wa-tgp" || s == "WA_TGP" || s == "wa_tgp") return Arch::wa_tgp;
    if (s == "wa-tt" || s == "WA_TT" || s == "wa_tt") return Arch::wa_tt;
    if (s == "dt" || s == "DT") return Arch::dt;
    throw ConfigError("unknown head architecture '" + s + "' (expected wa-tgp, wa-tt or dt)");
}

std::string to_string(const LayerMode& m) { return m.is_all() ? "all" : std::to_string(m.layer()); }

LayerMode layer_mode_from_string(const std::string& s) {
    if (s == "all") return LayerMode::all();
    std::size_t used = 0;
    int k = -1;
    try {
        k = std::stoi(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty() || k < 0) throw ConfigError("layer mode must be 'all' or a layer index, got '" + s + "'");
    return LayerMode::single(k);
}

nlohmann::ordered_json to_json(const HeadConfig& c) {
    return {{"arch", to_string(c.arch)},   {"layers", to_string(c.layers)}, {"embed_dim", c.embed_dim},
            {"pool_factor", c.pool_factor}, {"depth", c.depth},             {"heads", c.heads},
            {"ff_mult", c.ff_mult},         {"positional", c.positional},   {"seed", c.seed}};
}

HeadConfig head_config_from_json(const nlohmann::json& j) {
    HeadConfig c;
    c.arch = arch_from_string(j.at("arch").get<std::string>());
    c.layers = layer_mode_from_string(j.at("layers").get<std::string>());
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.pool_factor = j.at("pool_factor").get<std::size_t>();
    c.depth = j.at("depth").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.ff_mult = j.at("ff_mult").get<std::size_t>();
    c.positional = j.at("positional").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

nlohmann::ordered_json to_json(const HeadDims& d) {
    return {{"layers", d.layers}, {"channels", d.channels}, {"audiogram_bins", d.audiogram_bins}};
}

HeadDims head_dims_from_json(const nlohmann::json& j) {
    return {j.at("layers").get<int>(), j.at("channels").get<int>(), j.at("audiogram_bins").get<std::size_t>()};
}

std::vector<int> selected_layers(const HeadConfig& cfg, int total_layers) {
    if (total_layers <= 0) throw ConfigError("SFM must have at least one layer");
    if (cfg.layers.is_all()) {
        std::vector<int> all(static_cast<std::size_t>(total_layers));
        for (int i = 0; i < total_layers; ++i) all[static_cast<std::size_t>(i)] = i;
        return all;
    }
    const int k = cfg.layers.layer();
    if (k < 0 || k >= total_layers)
        throw ConfigError("Single(" + std::to_string(k) + ") out of range for an SFM with " +
                          std::to_string(total_layers) + " layers");
    return {k};
}

std::size_t fusion_item_count(const HeadConfig& cfg, int total_layers) {
    return selected_layers(cfg, total_layers).size() + 1;
}

namespace {

bool has_temporal_transformer(Arch a) { return a != Arch::wa_tgp; }

nn::TransformerShape block_shape(const HeadConfig& cfg) { return {cfg.embed_dim, cfg.heads, cfg.ff_mult}; }

std::string proj_name(int layer) { return "proj.layer" + std::to_string(layer); }

void validate(const HeadConfig& cfg) {
    if (cfg.embed_dim == 0) throw ConfigError("embed_dim must be positive");
    if (cfg.pool_factor < 1) throw ConfigError("pool_factor must be >= 1");
    if (has_temporal_transformer(cfg.arch)) {
        if (cfg.depth == 0) throw ConfigError("transformer depth must be >= 1");
        if (cfg.heads == 0 || cfg.embed_dim % cfg.heads != 0)
            throw ConfigError("embed_dim " + std::to_string(cfg.embed_dim) + " not divisible by " +
                              std::to_string(cfg.heads) + " attention heads");
    }
}

}  // namespace

HeadParams init_head(const HeadConfig& cfg, const data::SfmDescriptor& sfm, std::size_t audiogram_bins) {
    validate(cfg);
    if (sfm.channels <= 0) throw ConfigError("SFM channel dimension must be positive");
    if (audiogram_bins == 0) throw ConfigError("audiogram must have at least one frequency");
    const auto layers = selected_layers(cfg, sfm.layers);
    const auto C = static_cast<std::size_t>(sfm.channels);
    const auto d = cfg.embed_dim;

    HeadParams hp{cfg, HeadDims{sfm.layers, sfm.channels, audiogram_bins}, {}};
    Rng rng(derive_seed(cfg.seed, "head-init"));
    auto& p = hp.params;
    for (int l : layers) {
        p.add(proj_name(l) + ".weight", nn::uniform_init(C, d, rng));
        p.add(proj_name(l) + ".bias", Tensor::matrix(1, d, 0.0));
    }
    p.add("proj.audiogram.weight", nn::uniform_init(audiogram_bins, d, rng));
    p.add("proj.audiogram.bias", Tensor::matrix(1, d, 0.0));
    if (has_temporal_transformer(cfg.arch))
        for (std::size_t b = 0; b < cfg.depth; ++b)
            nn::init_transformer_block(p, "temporal.block" + std::to_string(b), block_shape(cfg), rng);
    if (cfg.arch == Arch::dt) {
        for (std::size_t b = 0; b < cfg.depth; ++b)
            nn::init_transformer_block(p, "layerwise.block" + std::to_string(b), block_shape(cfg), rng);
    } else {
        p.add("fusion.logits", Tensor::matrix(1, layers.size() + 1, 0.0));
    }
    p.add("out.weight", Tensor::matrix(d, 1, 0.0));
    p.add("out.bias", Tensor::matrix(1, 1, 50.0));
    return hp;
}

Tensor fusion_weights(const HeadParams& p) {
    if (p.config.arch == Arch::dt) throw ConfigError("DT fuses layers with a transformer, not scalar weights");
    ad::Graph g;
    return g.value(ad::softmax_rows(g, g.constant(p.params.get("fusion.logits"))));
}

HeadInput prepare_input(const data::LayerFeatureTensor& x, const data::Audiogram& a, const HeadConfig& cfg,
                        const HeadDims& dims) {
    if (static_cast<int>(x.layers()) != dims.layers || static_cast<int>(x.channels()) != dims.channels)
        throw ShapeError("features are [" + std::to_string(x.layers()) + " layers x " + std::to_string(x.channels()) +
                         " channels], head expects [" + std::to_string(dims.layers) + " x " +
                         std::to_string(dims.channels) + "]");
    if (a.left.size() != dims.audiogram_bins || a.right.size() != dims.audiogram_bins)
        throw ShapeError("audiogram has " + std::to_string(a.left.size()) + "/" + std::to_string(a.right.size()) +
                         " bins, head expects " + std::to_string(dims.audiogram_bins));
    const auto layers = selected_layers(cfg, dims.layers);
    HeadInput in;
    for (std::size_t ear = 0; ear < data::kEars; ++ear) {
        auto& e = in.ears[ear];
        for (int l : layers) {
            const auto frames = x.layer_matrix(ear, static_cast<std::size_t>(l));
            e.layers.push_back(cfg.arch == Arch::wa_tgp ? nn::global_mean_pool(frames)
                                                        : nn::temporal_pool(frames, cfg.pool_factor));
        }
        const auto& thresholds = ear == 0 ? a.left : a.right;
        std::vector<double> scaled(thresholds.size());
        for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = thresholds[i] / 100.0;
        e.audiogram = Tensor::row(std::move(scaled));
    }
    return in;
}

namespace {

ad::Var transformer_stack(ad::Graph& g, ad::Var seq, const ad::VarMap& vars, const std::string& prefix,
                          const HeadConfig& cfg) {
    if (cfg.positional) {
        const auto& v = g.value(seq);
        seq = ad::add(g, seq, g.constant(nn::sinusoidal_positions(v.rows(), v.cols())));
    }
    for (std::size_t b = 0; b < cfg.depth; ++b)
        seq = nn::transformer_block(g, seq, vars, prefix + ".block" + std::to_string(b), block_shape(cfg));
    return seq;
}

ad::Var ear_embedding(ad::Graph& g, const EarInput& ear, const std::vector<int>& layers, const ad::VarMap& vars,
                      const HeadConfig& cfg) {
    std::vector<ad::Var> items;
    items.reserve(layers.size() + 1);
    for (std::size_t j = 0; j < layers.size(); ++j) {
        const auto name = proj_name(layers[j]);
        auto tokens = ad::linear(g, g.constant(ear.layers[j]), vars.at(name + ".weight"), vars.at(name + ".bias"));
        if (has_temporal_transformer(cfg.arch))
            tokens = ad::mean_rows(g, transformer_stack(g, tokens, vars, "temporal", cfg));
        items.push_back(tokens);
    }
    items.push_back(
        ad::linear(g, g.constant(ear.audiogram), vars.at("proj.audiogram.weight"), vars.at("proj.audiogram.bias")));

    if (cfg.arch == Arch::dt) {
        auto seq = ad::stack_rows(g, items);
        return ad::mean_rows(g, transformer_stack(g, seq, vars, "layerwise", cfg));
    }
    auto weights = ad::softmax_rows(g, vars.at("fusion.logits"));
    return ad::weighted_sum(g, items, weights);
}

}  // namespace

ad::Var head_graph(ad::Graph& g, const HeadInput& in, const ad::VarMap& vars, const HeadConfig& cfg,
                   const HeadDims& dims) {
    const auto layers = selected_layers(cfg, dims.layers);
    for (const auto& ear : in.ears)
        if (ear.layers.size() != layers.size())
            throw ShapeError("head input holds " + std::to_string(ear.layers.size()) + " layers, config selects " +
                             std::to_string(layers.size()));
    auto left = ear_embedding(g, in.ears[0], layers, vars, cfg);
    auto right = ear_embedding(g, in.ears[1], layers, vars, cfg);
    auto joint = ad::scale(g, ad::add(g, left, right), 0.5);
    return ad::linear(g, joint, vars.at("out.weight"), vars.at("out.bias"));
}

double forward(const HeadInput& in, const HeadParams& p) {
    ad::Graph g;
    ad::VarMap vars;
    for (const auto& [name, param] : p.params.entries()) vars[name] = g.constant(param.value);
    return g.value(head_graph(g, in, vars, p.config, p.dims)).item();
}

namespace {

double forward_checked(Arch expected, const data::LayerFeatureTensor& x, const data::Audiogram& a,
                       const HeadParams& p) {
    if (p.config.arch != expected)
        throw ConfigError("head is " + to_string(p.config.arch) + ", called as " + to_string(expected));
    return forward(prepare_input(x, a, p.config, p.dims), p);
}

}  // namespace

double forward_wa_tgp(const data::LayerFeatureTensor& x, const data::Audiogram& a, const HeadParams& p) {
    return forward_checked(Arch::wa_tgp, x, a, p);
}

double forward_wa_tt(const data::LayerFeatureTensor& x, const data::Audiogram& a, const HeadParams& p) {
    return forward_checked(Arch::wa_tt, x, a, p);
}

double forward_dt(const data::LayerFeatureTensor& x, const data::Audiogram& a, const HeadParams& p) {
    return forward_checked(Arch::dt, x, a, p);
}

std::vector<double> head_forward(std::span<const HeadInput> batch, const HeadParams& p, kernels::Exec exec) {
    std::vector<double> out(batch.size());
    const auto n = static_cast<std::int64_t>(batch.size());
    std::exception_ptr failure;
    if (exec == kernels::Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (std::int64_t i = 0; i < n; ++i) {
            try {
                out[static_cast<std::size_t>(i)] = forward(batch[static_cast<std::size_t>(i)], p);
            } catch (...) {
#pragma omp critical(siphi_head_forward)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = forward(batch[static_cast<std::size_t>(i)], p);
    }
    return out;
}

std::vector<double> head_forward(std::span<const data::LayerFeatureTensor> features,
                                 std::span<const data::Audiogram> audiograms, const HeadParams& p,
                                 kernels::Exec exec) {
    if (features.size() != audiograms.size())
        throw ShapeError("head_forward: " + std::to_string(features.size()) + " feature tensors vs " +
                         std::to_string(audiograms.size()) + " audiograms");
    std::vector<HeadInput> inputs;
    inputs.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        inputs.push_back(prepare_input(features[i], audiograms[i], p.config, p.dims));
    return head_forward(inputs, p, exec);
}

}  // namespace siphi::heads
