#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "robusta/parallel.hpp"

namespace robusta {

/// Raw multimodal scene: a mono waveform plus m segments of F grayscale
/// frames. Frames are stored flat as [segment][frame][row][col].
struct RawScene {
  std::string id;
  std::uint32_t sample_rate = 8000;
  std::size_t segments = 0;
  std::size_t samples_per_segment = 0;
  std::size_t frames_per_segment = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> audio;
  std::vector<float> frames;
  std::uint8_t label = 0;
  /// One flag per segment on test scenes; empty on training scenes (weak
  /// supervision only sees the video label).
  std::vector<std::uint8_t> segment_truth;

  std::size_t frame_pixels() const { return height * width; }
  std::size_t segment_pixels() const { return frames_per_segment * frame_pixels(); }

  std::span<const float> segment_audio(std::size_t s) const {
    return std::span<const float>(audio).subspan(s * samples_per_segment, samples_per_segment);
  }
  std::span<const float> segment_frames(std::size_t s) const {
    return std::span<const float>(frames).subspan(s * segment_pixels(), segment_pixels());
  }
  std::span<float> segment_frames(std::size_t s) {
    return std::span<float>(frames).subspan(s * segment_pixels(), segment_pixels());
  }

  bool operator==(const RawScene&) const = default;
};

/// Throws ValidationError when shapes or value ranges are off.
void validate_scene(const RawScene& scene);

enum class EventMode : std::uint8_t { Correlated = 0, AudioOnly = 1, VisualOnly = 2 };

struct GenConfig {
  std::size_t train_count = 400;
  std::size_t test_count = 100;
  std::size_t segments = 16;
  std::size_t samples_per_segment = 1024;
  std::uint32_t sample_rate = 8000;
  std::size_t frames_per_segment = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  double anomaly_ratio = 0.5;

  /// Burst RMS as a multiple of the scene's background RMS (>= 3).
  double burst_min = 3.5;
  double burst_max = 5.0;
  /// Peak extra brightness of the flashing patch.
  double flash_intensity = 0.5;
  /// Segments per anomalous event.
  std::size_t event_duration = 2;
  /// Per-segment probability of a harmless loud audio bump in a normal
  /// segment, and its RMS range relative to the background.
  double audio_distractor_rate = 0.2;
  double audio_distractor_min = 1.2;
  double audio_distractor_max = 2.2;
  /// Lowest distractor tone in Hz; bursts carry tones from 1000 Hz up.
  double distractor_tone_min = 300.0;
  /// Per-scene camera noise std is drawn from this range.
  double sensor_noise_min = 0.01;
  double sensor_noise_max = 0.06;
  /// Per-segment probability of a harmless drifting blob in a normal
  /// segment, and its peak brightness.
  double visual_distractor_rate = 0.1;
  double visual_distractor_intensity = 0.4;
  /// Per-segment probabilities that a normal segment carries a harmless
  /// event rendered exactly like an anomaly: in both modalities, audio
  /// only, or visual only. They bound how well any detector can rank.
  /// Test split only, so weak labels in training stay consistent.
  double joint_confuser_rate = 0.03;
  double audio_confuser_rate = 0.015;
  double visual_confuser_rate = 0.0;
  EventMode event_mode = EventMode::Correlated;
  std::uint64_t seed = 0;

  std::size_t video_count() const { return train_count + test_count; }
  /// Stable text form used for config hashes.
  std::string canonical() const;
};

/// Throws ValidationError naming the offending field.
void validate_config(const GenConfig& cfg);

/// Scene `index` in [0, video_count()). Indices below train_count form the
/// training split. Pure function of (cfg, index).
RawScene generate_scene(const GenConfig& cfg, std::size_t index);

/// Label that generate_scene will assign to `index`.
std::uint8_t scene_label(const GenConfig& cfg, std::size_t index);

struct SceneSplit {
  std::vector<RawScene> train;
  std::vector<RawScene> test;
};

SceneSplit generate_dataset(const GenConfig& cfg, Exec exec = Exec::Parallel);

/// Root mean square of a sample range.
double rms(std::span<const float> x);

}  // namespace robusta
