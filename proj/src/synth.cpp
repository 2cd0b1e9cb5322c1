#include "siphi/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "siphi/rng.hpp"

namespace siphi::data {

std::vector<double> default_audiogram_frequencies(std::size_t bins) {
    if (bins == 8) return {250, 500, 1000, 2000, 3000, 4000, 6000, 8000};
    std::vector<double> f(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        const double frac = bins == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(bins - 1);
        f[i] = std::round(250.0 * std::pow(32.0, frac));
    }
    return f;
}

namespace {

std::string numbered(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

Audiogram listener_audiogram(std::size_t bins, Rng& rng) {
    const double base = rng.uniform(20.0, 60.0);
    const double slope = rng.uniform(0.0, 8.0);
    auto threshold = [](double v) { return std::clamp(5.0 * std::round(v / 5.0), -10.0, 120.0); };
    Audiogram a;
    for (std::size_t i = 0; i < bins; ++i) {
        const double left = base + slope * static_cast<double>(i) + 5.0 * rng.normal();
        a.left.push_back(threshold(left));
        a.right.push_back(threshold(left + 5.0 * rng.normal()));
    }
    return a;
}

// Fills one ear/layer slice with `centre` plus jitter that averages to zero per channel.
void fill_layer(LayerFeatureTensor& t, std::size_t ear, std::size_t layer, const std::vector<double>& centre,
                double jitter, Rng& rng) {
    const auto frames = t.frames(), channels = t.channels();
    std::vector<double> noise(static_cast<std::size_t>(frames) * channels);
    for (auto& v : noise) v = jitter * rng.normal();
    for (std::size_t c = 0; c < channels; ++c) {
        double mean = 0.0;
        for (std::size_t f = 0; f < frames; ++f) mean += noise[f * channels + c];
        mean /= frames;
        for (std::size_t f = 0; f < frames; ++f)
            t.at(ear, layer, f, c) = static_cast<float>(centre[c] + noise[f * channels + c] - mean);
    }
}

std::vector<double> pooled(const LayerFeatureTensor& t, std::size_t ear, std::size_t layer) {
    std::vector<double> out(t.channels(), 0.0);
    for (std::size_t f = 0; f < t.frames(); ++f)
        for (std::size_t c = 0; c < t.channels(); ++c) out[c] += static_cast<double>(t.at(ear, layer, f, c));
    for (auto& v : out) v /= t.frames();
    return out;
}

}  // namespace

SynthDataset synth_dataset(const SynthSpec& spec) {
    if (spec.samples == 0 || spec.layers == 0 || spec.frames == 0 || spec.channels == 0 || spec.audiogram_bins == 0 ||
        spec.listeners == 0 || spec.systems == 0 || spec.views.empty())
        throw ConfigError("synth: all dimensions must be positive");
    for (const auto& v : spec.views)
        if (v.informative_layer < 0 || v.informative_layer >= static_cast<int>(spec.layers))
            throw ConfigError("synth: informative layer " + std::to_string(v.informative_layer) + " out of range");

    const auto C = spec.channels;
    Rng rng(derive_seed(spec.seed, "synth"));

    SynthDataset out;
    out.weights.resize(C);
    double norm = 0.0;
    for (auto& w : out.weights) {
        w = rng.normal();
        norm += w * w;
    }
    norm = std::sqrt(norm);
    for (auto& w : out.weights) w *= 25.0 / norm;
    const double wnorm2 = 625.0;

    std::vector<Audiogram> audiograms;
    for (std::size_t l = 0; l < spec.listeners; ++l) audiograms.push_back(listener_audiogram(spec.audiogram_bins, rng));

    const auto views = spec.views.size();
    out.manifests.resize(views);
    out.features.assign(views, {});
    for (std::size_t v = 0; v < views; ++v) {
        auto& m = out.manifests[v];
        m.sfm = SfmDescriptor{spec.views[v].name, static_cast<int>(spec.layers), static_cast<int>(C), std::nullopt};
        m.audiogram_frequencies = default_audiogram_frequencies(spec.audiogram_bins);
    }

    const int width = spec.samples > 99999 ? 8 : 5;
    for (std::size_t i = 0; i < spec.samples; ++i) {
        Rng srng(derive_seed(spec.seed, i));
        // Latent centre whose projection on w hits a target score in [5, 95].
        const double target = srng.uniform(5.0, 95.0);
        std::vector<std::vector<double>> centre(kEars, std::vector<double>(C));
        LayerFeatureTensor reference(1, spec.frames, C);
        for (std::size_t ear = 0; ear < kEars; ++ear) {
            std::vector<double> u(C);
            double proj = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                u[c] = srng.uniform(-1.0, 1.0);
                proj += out.weights[c] * u[c];
            }
            const double shift = ((target - 50.0) - proj) / wnorm2;
            for (std::size_t c = 0; c < C; ++c) centre[ear][c] = u[c] + shift * out.weights[c];
            fill_layer(reference, ear, 0, centre[ear], spec.frame_jitter, srng);
        }
        // Both ears see the same planted score; the head averages ears.
        double signal = 0.0;
        for (std::size_t ear = 0; ear < kEars; ++ear) {
            const auto p = pooled(reference, ear, 0);
            for (std::size_t c = 0; c < C; ++c) signal += 0.5 * out.weights[c] * p[c];
        }
        const double score = std::clamp(out.bias + signal + spec.noise_sd * srng.normal(), 0.0, 100.0);

        const auto listener = i % spec.listeners;
        Sample s;
        s.sample_id = numbered("s", i, width);
        s.listener_id = numbered("L", listener + 1, 2);
        s.system_id = numbered("S", srng.index(spec.systems) + 1, 2);
        s.score = score;
        s.feature_path = "features/" + s.sample_id + ".sfmf";
        s.audiogram = audiograms[listener];

        for (std::size_t v = 0; v < views; ++v) {
            const auto& view = spec.views[v];
            Rng vrng(derive_seed(derive_seed(spec.seed, view.name), i));
            LayerFeatureTensor t(spec.layers, spec.frames, C);
            for (std::size_t ear = 0; ear < kEars; ++ear) {
                for (std::size_t layer = 0; layer < spec.layers; ++layer) {
                    if (static_cast<int>(layer) == view.informative_layer) {
                        std::vector<double> offset(C);
                        for (auto& o : offset) o = view.view_noise > 0 ? view.view_noise * vrng.normal() : 0.0;
                        for (std::size_t f = 0; f < spec.frames; ++f)
                            for (std::size_t c = 0; c < C; ++c)
                                t.at(ear, layer, f, c) =
                                    static_cast<float>(reference.at(ear, 0, f, c) + offset[c]);
                    } else {
                        std::vector<double> noise_centre(C);
                        for (auto& x : noise_centre) x = vrng.uniform(-1.5, 1.5);
                        fill_layer(t, ear, layer, noise_centre, spec.frame_jitter, vrng);
                    }
                }
            }
            out.features[v].push_back(std::move(t));
            out.manifests[v].samples.push_back(s);
        }
    }
    return out;
}

std::vector<std::filesystem::path> write_synth_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir) {
    const auto ds = synth_dataset(spec);
    std::vector<std::filesystem::path> paths;
    for (std::size_t v = 0; v < ds.manifests.size(); ++v) {
        const auto dir = ds.manifests.size() == 1 ? out_dir : out_dir / ds.manifests[v].sfm.name;
        for (std::size_t i = 0; i < ds.manifests[v].samples.size(); ++i)
            write_feature_file(ds.features[v][i], dir / ds.manifests[v].samples[i].feature_path);
        const auto path = dir / "manifest.json";
        save_manifest(ds.manifests[v], path);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace siphi::data
