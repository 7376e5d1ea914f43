#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace robusta {

enum class Modality : std::uint8_t { Audio = 0, Visual = 1 };

std::string_view to_string(Modality m) noexcept;

/// Reference feature widths of the pretrained extractors (VGGish 128, I3D
/// 2048). Desk-scale runs default to much smaller toy widths.
inline constexpr std::size_t kReferenceAudioDim = 128;
inline constexpr std::size_t kReferenceVisualDim = 2048;

/// Per-segment feature matrix for one modality of one video, row-major
/// segments x dim.
struct SegmentedModalityFeatures {
  Modality modality = Modality::Visual;
  std::size_t segments = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  SegmentedModalityFeatures() = default;
  SegmentedModalityFeatures(Modality mod, std::size_t m, std::size_t d)
      : modality(mod), segments(m), dim(d), values(m * d, 0.0f) {}

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * dim, dim);
  }
  std::span<float> row(std::size_t i) {
    return std::span<float>(values).subspan(i * dim, dim);
  }
  float at(std::size_t i, std::size_t j) const { return values[i * dim + j]; }

  bool operator==(const SegmentedModalityFeatures&) const = default;
};

/// One video: a weakly labelled bag of segments with one or two modalities.
struct VideoBag {
  std::string id;
  std::uint8_t label = 0;  // 1 = contains an anomaly
  std::optional<SegmentedModalityFeatures> audio;
  std::optional<SegmentedModalityFeatures> visual;
  std::optional<std::vector<std::uint8_t>> segment_truth;

  /// Segment count of whichever modality is present (0 if neither).
  std::size_t segment_count() const;
  const SegmentedModalityFeatures* features(Modality m) const;

  bool operator==(const VideoBag&) const = default;
};

/// Checks every SegmentedModalityFeatures invariant. Throws ValidationError.
void validate_features(const SegmentedModalityFeatures& f,
                       std::string_view owner = {});

/// Checks every VideoBag invariant; the message names the bag id and the
/// violated invariant. Throws ValidationError.
void validate_bag(const VideoBag& bag);

}  // namespace robusta
