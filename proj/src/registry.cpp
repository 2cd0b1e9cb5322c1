#include "siphi/data/registry.hpp"

#include "siphi/errors.hpp"

namespace siphi::data {

const std::vector<SfmDescriptor>& sfm_registry() {
    // Encoder geometry is what the exporter captures per checkpoint:
    // canary-1b, parakeet-tdt-1.1b, whisper large-v3, owsm v3.1 ebf, and the
    // speech-token hidden states of phi-4-multimodal-instruct.
    static const std::vector<SfmDescriptor> registry = {
        {"Canary", 24, 1024, SfmAttributes{6.50, 86e3, "2023.09", 2}},
        {"Parakeet", 42, 1024, SfmAttributes{7.01, 64e3, "2023.09", 1}},
        {"Whisper", 32, 1280, SfmAttributes{7.44, 5e6, "2020.05", 4}},
        {"OWSM", 18, 1024, SfmAttributes{7.70, 180e3, "2022.10", 4}},
        {"Phi-4", 32, 3072, SfmAttributes{6.14, 2e6, "2017.06", 1}},
    };
    return registry;
}

const SfmDescriptor& find_sfm(const std::string& name) {
    for (const auto& d : sfm_registry())
        if (d.name == name) return d;
    throw ConfigError("unknown SFM '" + name + "'");
}

}  // namespace siphi::data
