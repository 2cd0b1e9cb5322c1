#pragma once

#include <optional>
#include <string>
#include <vector>

namespace siphi::data {

struct SfmAttributes {
    double asr_wer = 0.0;        // percent
    double data_hours = 0.0;
    std::string arch_date;       // "YYYY.MM" of the encoder architecture
    int train_task_count = 0;
};

struct SfmDescriptor {
    std::string name;
    int layers = 0;
    int channels = 0;
    std::optional<SfmAttributes> attributes;
};

// The five backbones studied, with their encoder geometry and key attributes.
const std::vector<SfmDescriptor>& sfm_registry();
// Throws ConfigError for unknown names.
const SfmDescriptor& find_sfm(const std::string& name);

}  // namespace siphi::data
