#include "robusta/types.hpp"

#include <cmath>

#include "robusta/error.hpp"

namespace robusta {

std::string_view to_string(Modality m) noexcept {
  return m == Modality::Audio ? "audio" : "visual";
}

std::size_t VideoBag::segment_count() const {
  if (visual) return visual->segments;
  if (audio) return audio->segments;
  return 0;
}

const SegmentedModalityFeatures* VideoBag::features(Modality m) const {
  const auto& slot = m == Modality::Audio ? audio : visual;
  return slot ? &*slot : nullptr;
}

void validate_features(const SegmentedModalityFeatures& f,
                       std::string_view owner) {
  auto fail = [&](const std::string& what) {
    std::string msg = std::string(to_string(f.modality)) + " features";
    if (!owner.empty()) msg = "bag '" + std::string(owner) + "': " + msg;
    throw ValidationError("core-data", msg + ": " + what);
  };
  if (f.segments < 1) fail("segment count must be >= 1");
  if (f.dim < 1) fail("dim must be >= 1");
  if (f.values.size() != f.segments * f.dim) {
    fail("values size " + std::to_string(f.values.size()) + " != " +
         std::to_string(f.segments) + "x" + std::to_string(f.dim));
  }
  for (float v : f.values) {
    if (!std::isfinite(v)) fail("non-finite value");
  }
}

void validate_bag(const VideoBag& bag) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("core-data", "bag '" + bag.id + "': " + what);
  };
  if (!bag.audio && !bag.visual) fail("no modality present");
  if (bag.label > 1) fail("label must be 0 or 1");
  if (bag.audio) {
    if (bag.audio->modality != Modality::Audio) fail("audio slot holds visual features");
    validate_features(*bag.audio, bag.id);
  }
  if (bag.visual) {
    if (bag.visual->modality != Modality::Visual) fail("visual slot holds audio features");
    validate_features(*bag.visual, bag.id);
  }
  if (bag.audio && bag.visual && bag.audio->segments != bag.visual->segments) {
    fail("segment count mismatch (audio " + std::to_string(bag.audio->segments) +
         ", visual " + std::to_string(bag.visual->segments) + ")");
  }
  if (bag.segment_truth) {
    const auto& truth = *bag.segment_truth;
    if (truth.size() != bag.segment_count()) fail("segment_truth length != segment count");
    for (auto flag : truth) {
      if (flag > 1) fail("segment_truth flag must be 0 or 1");
      if (flag == 1 && bag.label == 0) fail("segment_truth flag set on a normal (label 0) bag");
    }
  }
}

}  // namespace robusta
