#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "siphi/errors.hpp"
#include "siphi/heads.hpp"

namespace siphi::heads {

struct CheckpointError : Error {
    using Error::Error;
};

// Little-endian HEAD container:
//   "HEAD" | u32 version=1 | u32 n | n bytes of JSON {config, dims}
//   | u32 param_count | per param: u32 name_len, name, u32 trainable, u32 rank, u32 extents..., f64 values
//   | u64 FNV-1a over every byte after the version field
std::vector<std::byte> encode_checkpoint(const HeadParams& p);
HeadParams decode_checkpoint(std::span<const std::byte> bytes);

void save_checkpoint(const HeadParams& p, const std::filesystem::path& path);
HeadParams load_checkpoint(const std::filesystem::path& path);

}  // namespace siphi::heads
