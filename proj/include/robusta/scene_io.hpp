#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "robusta/synthgen.hpp"

namespace robusta {

/// Seed and config hash of the run that produced an artifact.
struct Provenance {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  bool operator==(const Provenance&) const = default;
};

/// RAS1 layout (little-endian): "RAS1" | version u8 | seed u64 |
/// config_hash u64 | scene_count u32 | per scene: id_len u16, id, label u8,
/// sample_rate u32, m u32, samples_per_segment u32, F u32, H u32, W u32,
/// audio f32[m*sps], frames f32[m*F*H*W], truth_flag u8, [m bytes].
std::vector<std::uint8_t> encode_scenes(std::span<const RawScene> scenes,
                                        const Provenance& prov);
std::vector<RawScene> decode_scenes(std::span<const std::uint8_t> bytes,
                                    Provenance* prov = nullptr);

void write_scenes(std::span<const RawScene> scenes, const Provenance& prov,
                  const std::filesystem::path& path);
std::vector<RawScene> read_scenes(const std::filesystem::path& path,
                                  Provenance* prov = nullptr);

}  // namespace robusta
