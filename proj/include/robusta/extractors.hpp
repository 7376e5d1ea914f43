#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "robusta/parallel.hpp"
#include "robusta/synthgen.hpp"
#include "robusta/types.hpp"

namespace robusta {

/// Hand-crafted stand-ins for the pretrained audio and visual encoders.
struct ExtractorConfig {
  std::size_t audio_dim = 64;
  std::size_t visual_dim = 256;
  /// Triangular mel-spaced filters over the segment magnitude spectrum.
  std::size_t filter_count = 20;
  /// Sub-frames per segment used for the temporal (delta) statistics.
  std::size_t audio_subframes = 4;
  /// Finest patch grid; coarser levels halve it down to 1x1.
  std::size_t grid = 8;
  double log_floor = 1e-8;
};

/// Throws ValidationError on non-positive dims or audio_dim >= visual_dim.
void validate_config(const ExtractorConfig& cfg);

/// Per segment: [log filterbank energies | sub-frame std of log energies |
/// mean absolute sub-frame delta | log energy, zero-crossing rate, spectral
/// centroid, spectral flatness], zero-padded or truncated to audio_dim.
SegmentedModalityFeatures extract_audio_features(std::span<const float> audio,
                                                 std::size_t segments,
                                                 std::uint32_t sample_rate,
                                                 const ExtractorConfig& cfg);

/// Per segment and per grid level (grid, grid/2, ..., 1): [patch means |
/// patch stds | patch motion energies], concatenated and padded or truncated
/// to visual_dim.
SegmentedModalityFeatures extract_visual_features(std::span<const float> frames,
                                                  std::size_t segments,
                                                  std::size_t frames_per_segment,
                                                  std::size_t height, std::size_t width,
                                                  const ExtractorConfig& cfg);

/// Both modalities of one scene. Test scenes keep their segment truth.
VideoBag extract_bag(const RawScene& scene, const ExtractorConfig& cfg);

/// Batch kernel over scenes; Serial is the reference for Parallel.
std::vector<VideoBag> extract_all(std::span<const RawScene> scenes, const ExtractorConfig& cfg,
                                  Exec exec = Exec::Parallel);

/// Center frequencies (Hz) of the filterbank; exposed for tests.
std::vector<double> filter_centers(std::uint32_t sample_rate, std::size_t filter_count);

}  // namespace robusta
