#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rupnet/model.hpp"

namespace rupnet {

// Little-endian layout:
//   "RUPN" | u32 version | u32 json_len | config JSON | u32 tensor_count |
//   tensor_count x { u16 name_len | name | u8 rank | rank x u32 dims | f32 data }
// Tensors follow ParamStore order; running statistics are identified by their
// ".running_mean" / ".running_var" name suffix.
inline constexpr char kCheckpointMagic[4] = {'R', 'U', 'P', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const Network<float>& net);

/// Throws CorruptCheckpoint (with byte offset) on bad magic, version, truncation, or a
/// tensor table that does not match the embedded config.
Network<float> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path);
Network<float> load_checkpoint(const std::filesystem::path& path);

/// FNV-1a 64 of the file contents, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

}  // namespace rupnet
