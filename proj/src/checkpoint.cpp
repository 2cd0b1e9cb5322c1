#include "siphi/checkpoint.hpp"

#include <cstring>

#include "siphi/data/feature_file.hpp"

namespace siphi::heads {

namespace le = data::le;

namespace {

constexpr char kMagic[4] = {'H', 'E', 'A', 'D'};
constexpr std::uint32_t kVersion = 1;

class Reader {
public:
    explicit Reader(std::span<const std::byte> b) : bytes_(b) {}
    const std::byte* take(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw CheckpointError("checkpoint: truncated");
        const auto* p = bytes_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint32_t u32() { return le::get_u32(take(4)); }
    double f64() { return le::get_f64(take(8)); }
    std::size_t pos() const { return pos_; }

private:
    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::byte> encode_checkpoint(const HeadParams& p) {
    std::vector<std::byte> out;
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    le::put_u32(out, kVersion);
    const auto meta = nlohmann::ordered_json{{"config", to_json(p.config)}, {"dims", to_json(p.dims)}}.dump();
    le::put_u32(out, static_cast<std::uint32_t>(meta.size()));
    for (char c : meta) out.push_back(static_cast<std::byte>(c));
    le::put_u32(out, static_cast<std::uint32_t>(p.params.size()));
    for (const auto& [name, param] : p.params.entries()) {
        le::put_u32(out, static_cast<std::uint32_t>(name.size()));
        for (char c : name) out.push_back(static_cast<std::byte>(c));
        le::put_u32(out, param.trainable ? 1u : 0u);
        le::put_u32(out, static_cast<std::uint32_t>(param.value.rank()));
        for (auto e : param.value.shape()) le::put_u32(out, static_cast<std::uint32_t>(e));
        for (double v : param.value.data()) le::put_f64(out, v);
    }
    le::put_u64(out, fnv1a64(std::span(out).subspan(8)));
    return out;
}

HeadParams decode_checkpoint(std::span<const std::byte> bytes) {
    if (bytes.size() < 16) throw CheckpointError("checkpoint: truncated");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CheckpointError("checkpoint: bad magic");
    if (le::get_u32(bytes.data() + 4) != kVersion) throw CheckpointError("checkpoint: unsupported version");
    const auto body = bytes.subspan(0, bytes.size() - 8);
    if (fnv1a64(body.subspan(8)) != le::get_u64(bytes.data() + bytes.size() - 8))
        throw CheckpointError("checkpoint: checksum mismatch");

    Reader r(body);
    r.take(8);
    const auto meta_len = r.u32();
    const auto* meta = reinterpret_cast<const char*>(r.take(meta_len));
    HeadParams p;
    try {
        const auto j = nlohmann::json::parse(std::string(meta, meta_len));
        p.config = head_config_from_json(j.at("config"));
        p.dims = head_dims_from_json(j.at("dims"));
    } catch (const nlohmann::json::exception& ex) {
        throw CheckpointError(std::string("checkpoint: bad metadata: ") + ex.what());
    }
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = r.u32();
        const auto* name = reinterpret_cast<const char*>(r.take(len));
        const bool trainable = r.u32() != 0;
        const auto rank = r.u32();
        std::vector<std::size_t> shape(rank);
        for (auto& e : shape) e = r.u32();
        Tensor t(shape, 0.0);
        for (auto& v : t.data()) v = r.f64();
        p.params.add(std::string(name, len), std::move(t), trainable);
    }
    if (r.pos() != body.size()) throw CheckpointError("checkpoint: unexpected trailing bytes");
    return p;
}

void save_checkpoint(const HeadParams& p, const std::filesystem::path& path) {
    data::write_file_bytes(path, encode_checkpoint(p));
}

HeadParams load_checkpoint(const std::filesystem::path& path) {
    std::vector<std::byte> bytes;
    try {
        bytes = data::read_file_bytes(path);
    } catch (const data::FeatureFileError& ex) {
        throw CheckpointError(ex.what());
    }
    return decode_checkpoint(bytes);
}

}  // namespace siphi::heads
