#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "robusta/types.hpp"

namespace robusta {

inline constexpr std::uint8_t kFeatureFormatVersion = 1;

/// RAF1 layout (little-endian): "RAF1" | version u8 | video_count u32 | per
/// video: id_len u16, id, label u8, m u32, d_audio u32 (0 = absent),
/// d_visual u32 (0 = absent), audio f32[m*d_audio], visual f32[m*d_visual],
/// truth_flag u8, [m bytes of 0/1 when truth_flag == 1].
std::vector<std::uint8_t> encode_features(std::span<const VideoBag> bags);
std::vector<VideoBag> decode_features(std::span<const std::uint8_t> bytes);

void write_features(std::span<const VideoBag> bags,
                    const std::filesystem::path& path);
std::vector<VideoBag> read_features(const std::filesystem::path& path);

}  // namespace robusta
