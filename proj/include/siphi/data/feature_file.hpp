#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "siphi/errors.hpp"
#include "siphi/tensor.hpp"

namespace siphi::data {

inline constexpr std::size_t kEars = 2;

// Encoder features of one sample for one SFM: [ear][layer][frame][channel], float32.
class LayerFeatureTensor {
public:
    LayerFeatureTensor() = default;
    LayerFeatureTensor(std::uint32_t layers, std::uint32_t frames, std::uint32_t channels);
    LayerFeatureTensor(std::uint32_t layers, std::uint32_t frames, std::uint32_t channels, std::vector<float> values);

    std::uint32_t layers() const { return layers_; }
    std::uint32_t frames() const { return frames_; }
    std::uint32_t channels() const { return channels_; }

    std::size_t offset(std::size_t ear, std::size_t layer, std::size_t frame, std::size_t channel) const {
        return ((ear * layers_ + layer) * frames_ + frame) * channels_ + channel;
    }
    float& at(std::size_t ear, std::size_t layer, std::size_t frame, std::size_t channel) {
        return values_[offset(ear, layer, frame, channel)];
    }
    float at(std::size_t ear, std::size_t layer, std::size_t frame, std::size_t channel) const {
        return values_[offset(ear, layer, frame, channel)];
    }

    std::span<const float> values() const { return values_; }
    std::span<float> values() { return values_; }

    // One ear/layer slice promoted to float64, [frames x channels].
    Tensor layer_matrix(std::size_t ear, std::size_t layer) const;

    // Same tensor with left and right ears exchanged.
    LayerFeatureTensor swapped_ears() const;

    bool operator==(const LayerFeatureTensor&) const = default;

private:
    std::uint32_t layers_ = 0;
    std::uint32_t frames_ = 0;
    std::uint32_t channels_ = 0;
    std::vector<float> values_;
};

struct FeatureFileError : Error {
    enum class Kind { io, bad_magic, version_mismatch, bad_header, truncated, trailing_bytes, checksum_mismatch, non_finite };
    FeatureFileError(Kind k, const std::string& what) : Error(what), kind(k) {}
    Kind kind;
};

inline constexpr char kFeatureMagic[4] = {'S', 'F', 'M', 'F'};
inline constexpr std::uint32_t kFeatureVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 4 + 5 * 4;

// Number of float32 values the header of an (L, T, C) file declares.
std::uint64_t feature_value_count(std::uint32_t layers, std::uint32_t frames, std::uint32_t channels);

// Little-endian SFMF container:
//   "SFMF" | u32 version=1 | u32 ears=2 | u32 layers | u32 frames | u32 channels
//   | f32 values in [ear][layer][frame][channel] order | u64 FNV-1a of the value bytes
std::vector<std::byte> encode_feature_file(const LayerFeatureTensor& t);
LayerFeatureTensor decode_feature_file(std::span<const std::byte> bytes);

void write_feature_file(const LayerFeatureTensor& t, const std::filesystem::path& path);
LayerFeatureTensor read_feature_file(const std::filesystem::path& path);

// Shared little-endian helpers (also used by the head checkpoint format).
namespace le {
void put_u32(std::vector<std::byte>& out, std::uint32_t v);
void put_u64(std::vector<std::byte>& out, std::uint64_t v);
void put_f32(std::vector<std::byte>& out, float v);
void put_f64(std::vector<std::byte>& out, double v);
std::uint32_t get_u32(const std::byte* p);
std::uint64_t get_u64(const std::byte* p);
float get_f32(const std::byte* p);
double get_f64(const std::byte* p);
}  // namespace le

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace siphi::data
