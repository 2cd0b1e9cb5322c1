#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "siphi/data/manifest.hpp"

namespace siphi::data {

// One SFM "view" of the shared synthetic samples. Each view carries the
// planted signal in its own informative layer, blurred by a per-sample,
// per-channel offset of standard deviation `view_noise`.
struct SynthView {
    std::string name = "synthetic";
    int informative_layer = 4;
    double view_noise = 0.0;
};

struct SynthSpec {
    std::size_t samples = 600;
    std::uint32_t layers = 6;
    std::uint32_t frames = 60;
    std::uint32_t channels = 8;
    std::size_t audiogram_bins = 8;
    double noise_sd = 2.0;        // score noise
    double frame_jitter = 0.5;    // zero-mean per-frame variation
    std::size_t listeners = 27;
    std::size_t systems = 18;
    std::uint64_t seed = 17;
    std::vector<SynthView> views = {SynthView{}};
};

struct SynthDataset {
    std::vector<Manifest> manifests;                          // one per view, identical samples
    std::vector<std::vector<LayerFeatureTensor>> features;    // [view][sample]
    std::vector<double> weights;                              // planted direction
    double bias = 50.0;
};

// score = clip(bias + w . meanpool(reference informative layer) + noise, 0, 100).
// The reference layer is the noise-free informative layer; the first view
// with view_noise == 0 stores it verbatim, so an affine fit on that view's
// pooled features is exact when noise_sd == 0.
SynthDataset synth_dataset(const SynthSpec& spec);

// Writes <out>/<view>/manifest.json plus features/<sample>.sfmf per view when
// there is more than one view, or <out>/manifest.json for a single view.
// Returns the manifest paths.
std::vector<std::filesystem::path> write_synth_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir);

// Standard audiometric grid for 8 bins, log-spaced 250..8000 Hz otherwise.
std::vector<double> default_audiogram_frequencies(std::size_t bins);

}  // namespace siphi::data
