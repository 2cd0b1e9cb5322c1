#include "siphi/data/feature_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace siphi::data {

LayerFeatureTensor::LayerFeatureTensor(std::uint32_t layers, std::uint32_t frames, std::uint32_t channels)
    : LayerFeatureTensor(layers, frames, channels,
                         std::vector<float>(feature_value_count(layers, frames, channels), 0.0f)) {}

LayerFeatureTensor::LayerFeatureTensor(std::uint32_t layers, std::uint32_t frames, std::uint32_t channels,
                                       std::vector<float> values)
    : layers_(layers), frames_(frames), channels_(channels), values_(std::move(values)) {
    if (layers == 0 || frames == 0 || channels == 0)
        throw ShapeError("feature tensor extents must be positive");
    if (values_.size() != feature_value_count(layers, frames, channels))
        throw ShapeError("feature tensor value count does not match [2 x " + std::to_string(layers) + " x " +
                         std::to_string(frames) + " x " + std::to_string(channels) + "]");
}

Tensor LayerFeatureTensor::layer_matrix(std::size_t ear, std::size_t layer) const {
    if (ear >= kEars || layer >= layers_) throw ShapeError("layer_matrix: ear/layer out of range");
    Tensor out = Tensor::matrix(frames_, channels_);
    const float* src = values_.data() + offset(ear, layer, 0, 0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(src[i]);
    return out;
}

LayerFeatureTensor LayerFeatureTensor::swapped_ears() const {
    LayerFeatureTensor out = *this;
    const auto half = values_.size() / 2;
    std::copy(values_.begin(), values_.begin() + half, out.values_.begin() + half);
    std::copy(values_.begin() + half, values_.end(), out.values_.begin());
    return out;
}

std::uint64_t feature_value_count(std::uint32_t layers, std::uint32_t frames, std::uint32_t channels) {
    return static_cast<std::uint64_t>(kEars) * layers * frames * channels;
}

namespace le {

template <class U>
static U bswap(U v) {
    if constexpr (sizeof(U) == 4) return __builtin_bswap32(v);
    else return __builtin_bswap64(v);
}

template <class U>
static void put(std::vector<std::byte>& out, U v) {
    if constexpr (std::endian::native == std::endian::big) v = bswap(v);
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out.insert(out.end(), p, p + sizeof(U));
}

template <class U>
static U get(const std::byte* p) {
    U v;
    std::memcpy(&v, p, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) v = bswap(v);
    return v;
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) { put(out, v); }
void put_u64(std::vector<std::byte>& out, std::uint64_t v) { put(out, v); }
void put_f32(std::vector<std::byte>& out, float v) { put(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::vector<std::byte>& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }
std::uint32_t get_u32(const std::byte* p) { return get<std::uint32_t>(p); }
std::uint64_t get_u64(const std::byte* p) { return get<std::uint64_t>(p); }
float get_f32(const std::byte* p) { return std::bit_cast<float>(get<std::uint32_t>(p)); }
double get_f64(const std::byte* p) { return std::bit_cast<double>(get<std::uint64_t>(p)); }

}  // namespace le

std::vector<std::byte> encode_feature_file(const LayerFeatureTensor& t) {
    for (float v : t.values())
        if (!std::isfinite(v)) throw DomainError("feature tensor contains non-finite values");
    std::vector<std::byte> out;
    out.reserve(kFeatureHeaderBytes + t.values().size() * 4 + 8);
    for (char c : kFeatureMagic) out.push_back(static_cast<std::byte>(c));
    le::put_u32(out, kFeatureVersion);
    le::put_u32(out, static_cast<std::uint32_t>(kEars));
    le::put_u32(out, t.layers());
    le::put_u32(out, t.frames());
    le::put_u32(out, t.channels());
    for (float v : t.values()) le::put_f32(out, v);
    const auto payload = std::span(out).subspan(kFeatureHeaderBytes);
    le::put_u64(out, fnv1a64(payload));
    return out;
}

LayerFeatureTensor decode_feature_file(std::span<const std::byte> bytes) {
    using K = FeatureFileError::Kind;
    if (bytes.size() < kFeatureHeaderBytes) throw FeatureFileError(K::truncated, "feature file: truncated header");
    if (std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) throw FeatureFileError(K::bad_magic, "feature file: bad magic");
    const auto version = le::get_u32(bytes.data() + 4);
    if (version != kFeatureVersion)
        throw FeatureFileError(K::version_mismatch, "feature file: unsupported version " + std::to_string(version));
    const auto ears = le::get_u32(bytes.data() + 8);
    const auto layers = le::get_u32(bytes.data() + 12);
    const auto frames = le::get_u32(bytes.data() + 16);
    const auto channels = le::get_u32(bytes.data() + 20);
    if (ears != kEars || layers == 0 || frames == 0 || channels == 0)
        throw FeatureFileError(K::bad_header, "feature file: invalid dimensions in header");
    const auto count = feature_value_count(layers, frames, channels);
    const auto expected = kFeatureHeaderBytes + count * 4 + 8;
    if (bytes.size() < expected)
        throw FeatureFileError(K::truncated, "feature file: payload truncated (" + std::to_string(bytes.size()) +
                                                 " of " + std::to_string(expected) + " bytes)");
    if (bytes.size() > expected) throw FeatureFileError(K::trailing_bytes, "feature file: unexpected trailing bytes");
    const auto payload = bytes.subspan(kFeatureHeaderBytes, count * 4);
    if (fnv1a64(payload) != le::get_u64(bytes.data() + kFeatureHeaderBytes + count * 4))
        throw FeatureFileError(K::checksum_mismatch, "feature file: payload checksum mismatch");
    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        values[i] = le::get_f32(payload.data() + 4 * i);
        if (!std::isfinite(values[i])) throw FeatureFileError(K::non_finite, "feature file: non-finite value");
    }
    return LayerFeatureTensor(layers, frames, channels, std::move(values));
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FeatureFileError(FeatureFileError::Kind::io, "cannot open '" + path.string() + "'");
    in.seekg(0, std::ios::end);
    const auto n = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<std::byte> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (!in) throw FeatureFileError(FeatureFileError::Kind::io, "cannot read '" + path.string() + "'");
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // Written beside the target and renamed, so readers never see a partial file.
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FeatureFileError(FeatureFileError::Kind::io, "cannot write '" + path.string() + "'");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw FeatureFileError(FeatureFileError::Kind::io, "short write to '" + path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw FeatureFileError(FeatureFileError::Kind::io, "cannot replace '" + path.string() + "': " + ec.message());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    write_file_bytes(path, std::as_bytes(std::span(text.data(), text.size())));
}

void write_feature_file(const LayerFeatureTensor& t, const std::filesystem::path& path) {
    write_file_bytes(path, encode_feature_file(t));
}

LayerFeatureTensor read_feature_file(const std::filesystem::path& path) { return decode_feature_file(read_file_bytes(path)); }

}  // namespace siphi::data
