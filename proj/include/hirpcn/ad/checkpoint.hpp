#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "hirpcn/ad/matrix.hpp"

namespace hirpcn::ad {

// Binary layout, all integers little-endian:
//   "HIRPCNCK" | u32 version | u64 count
//   count x { u32 name_len | name | u32 rank | u64 dims[rank] | f64 values[] }
// Entries are sorted by name. Values round-trip bit for bit.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const std::map<std::string, Matrix>& values);
/// Throws CheckpointFormat on a bad magic, version, or truncated payload.
std::map<std::string, Matrix> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::map<std::string, Matrix>& values);
std::map<std::string, Matrix> load_checkpoint(const std::filesystem::path& path);

}  // namespace hirpcn::ad
