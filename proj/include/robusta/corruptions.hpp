#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robusta/synthgen.hpp"
#include "robusta/types.hpp"

namespace robusta {

enum class CorruptionKind : std::uint8_t {
  // visual
  BitError,
  Brightness,
  Contrast,
  Fog,
  Rain,
  MotionBlur,
  Saturate,
  ShotNoise,
  // audio
  Babble,
  Bitrate,
  HfChannel,
  Pink,
  PitchShift,
  RandomDropout,
  Reverb,
  White,
};

inline constexpr std::array<CorruptionKind, 8> kVisualKinds = {
    CorruptionKind::BitError, CorruptionKind::Brightness, CorruptionKind::Contrast,
    CorruptionKind::Fog,      CorruptionKind::Rain,       CorruptionKind::MotionBlur,
    CorruptionKind::Saturate, CorruptionKind::ShotNoise};
inline constexpr std::array<CorruptionKind, 8> kAudioKinds = {
    CorruptionKind::Babble,     CorruptionKind::Bitrate,       CorruptionKind::HfChannel,
    CorruptionKind::Pink,       CorruptionKind::PitchShift,    CorruptionKind::RandomDropout,
    CorruptionKind::Reverb,     CorruptionKind::White};

/// Fractions of corrupted test videos used by the benchmark.
inline constexpr std::array<double, 7> kCorruptionLevels = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0};
inline constexpr int kMinSeverity = 1;
inline constexpr int kMaxSeverity = 5;
inline constexpr int kDefaultSeverity = 3;

Modality modality_of(CorruptionKind kind) noexcept;
std::string_view to_string(CorruptionKind kind) noexcept;
/// Accepts the snake_case names used in reports ("motion_blur", "hfchannel"...).
std::optional<CorruptionKind> parse_corruption_kind(std::string_view name);
bool is_allowed_fraction(double fraction) noexcept;

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::White;
  int severity = kDefaultSeverity;
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Throws ContractError when severity or fraction is outside the allowed set.
void validate_spec(const CorruptionSpec& spec);

/// Ladder value for (kind, severity): SNR in dB, bit depth, kernel length...
double severity_parameter(CorruptionKind kind, int severity);

/// Audio transform with an explicit ladder parameter. Output has the input's
/// length and is clipped to [-1, 1].
std::vector<float> apply_audio(std::span<const float> waveform, std::uint32_t sample_rate,
                               CorruptionKind kind, double parameter, std::uint64_t seed);
/// Visual transform over a stack of `frame_count` HxW frames. Clipped to [0, 1].
std::vector<float> apply_visual(std::span<const float> frames, std::size_t frame_count,
                                std::size_t height, std::size_t width, CorruptionKind kind,
                                double parameter, std::uint64_t seed);

std::vector<float> corrupt_audio(std::span<const float> waveform, std::uint32_t sample_rate,
                                 CorruptionKind kind, int severity, std::uint64_t seed);
std::vector<float> corrupt_visual(std::span<const float> frames, std::size_t frame_count,
                                  std::size_t height, std::size_t width, CorruptionKind kind,
                                  int severity, std::uint64_t seed);

/// Applies `kind` to the matching modality of a raw scene.
RawScene corrupt_scene(const RawScene& scene, CorruptionKind kind, int severity,
                       std::uint64_t seed);

/// Per-video corruption seed, keyed by video id so it does not depend on
/// list order or corruption level.
std::uint64_t corruption_seed(std::uint64_t base_seed, CorruptionKind kind,
                              std::string_view video_id);

/// Seeded permutation of [0, count). Every corruption level takes a prefix of
/// this order, which is what makes subsets nested across levels.
std::vector<std::size_t> corruption_order(std::size_t count, std::uint64_t seed);

/// round(fraction * count) ids, in selection order.
std::vector<std::string> select_corrupted_subset(std::span<const std::string> video_ids,
                                                 double fraction, std::uint64_t seed);

namespace corrupt {

/// signal + noise rescaled so that 20 log10(rms(signal)/rms(noise)) == snr_db.
/// No clipping.
std::vector<double> mix_at_snr(std::span<const double> signal, std::span<const double> noise,
                               double snr_db);
std::vector<double> white_noise(std::size_t n, std::uint64_t seed);
std::vector<double> pink_noise(std::size_t n, std::uint64_t seed);
std::vector<double> babble_noise(std::size_t n, std::uint32_t sample_rate, std::uint64_t seed);
/// Zeroes contiguous chunks totalling round(fraction * n) samples.
std::vector<double> random_dropout(std::span<const double> signal, double fraction,
                                   std::uint64_t seed);

}  // namespace corrupt

}  // namespace robusta
