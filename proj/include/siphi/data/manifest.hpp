#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "siphi/data/feature_file.hpp"
#include "siphi/data/registry.hpp"

namespace siphi::data {

struct Audiogram {
    std::vector<double> left;   // dB HL per declared frequency
    std::vector<double> right;

    Audiogram swapped() const { return {right, left}; }
    bool operator==(const Audiogram&) const = default;
};

struct Sample {
    std::string sample_id;
    std::string listener_id;
    std::string system_id;
    double score = 0.0;           // intelligibility, 0..100
    std::string feature_path;     // relative to the manifest
    Audiogram audiogram;
};

struct Manifest {
    SfmDescriptor sfm;
    std::vector<double> audiogram_frequencies;
    std::vector<Sample> samples;
    std::filesystem::path base_dir;  // directory holding the manifest; not serialized

    std::filesystem::path feature_file(const Sample& s) const { return base_dir / s.feature_path; }
};

struct ManifestError : Error {
    using Error::Error;
};

// Structural checks only (scores, audiogram lengths/range, ids); no file access.
void validate(const Manifest& m);

nlohmann::ordered_json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const SfmDescriptor& d);
SfmDescriptor sfm_from_json(const nlohmann::json& j);

// Manifest plus every feature file, validated against the declared SFM geometry.
struct Dataset {
    Manifest manifest;
    std::vector<LayerFeatureTensor> features;  // parallel to manifest.samples

    std::size_t index_of(const std::string& sample_id) const;
};

Dataset load_dataset(const std::filesystem::path& manifest_path);

// FNV-1a over the manifest bytes followed by every referenced feature file.
std::uint64_t dataset_hash(const std::filesystem::path& manifest_path);

}  // namespace siphi::data
