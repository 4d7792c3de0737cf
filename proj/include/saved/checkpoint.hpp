#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "saved/model.hpp"

namespace saved {

/// Checkpoint layout (all integers little-endian):
///
///   offset  size  field
///   0       4     magic "SAVD"
///   4       4     u32 format version (= kCheckpointVersion)
///   8       4     u32 base_channels
///   12      4     u32 max_channels
///   16      4     u32 spatial_stages
///   20      4     u32 temporal stride
///   24      4     u32 flags (bit 0: clamp_output)
///   28      8     u64 training step count
///   36      8     u64 RNG seed
///   44      4     u32 tensor count
///   48      ...   per tensor: u64 element count, then that many IEEE-754
///                 binary32 values, in ModelParams::parameters() order
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams<float> params;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on bad magic, version mismatch, truncation or a
/// tensor layout that disagrees with the stored config.
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace saved
