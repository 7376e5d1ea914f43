#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robusta/detector.hpp"
#include "robusta/extractors.hpp"
#include "robusta/fusion.hpp"
#include "robusta/gmm.hpp"
#include "robusta/rng.hpp"
#include "robusta/synthgen.hpp"
#include "robusta/types.hpp"

namespace robusta::testing {

inline SegmentedModalityFeatures random_features(Modality mod, std::size_t m, std::size_t d, Rng& rng) {
  SegmentedModalityFeatures f(mod, m, d);
  for (auto& v : f.values) v = static_cast<float>(rng.normal());
  return f;
}

inline VideoBag random_bag(const std::string& id, std::size_t m, std::size_t da, std::size_t dv, Rng& rng,
                           bool with_truth = false) {
  VideoBag b;
  b.id = id;
  b.label = static_cast<std::uint8_t>(rng.below(2));
  if (da > 0) b.audio = random_features(Modality::Audio, m, da, rng);
  if (dv > 0) b.visual = random_features(Modality::Visual, m, dv, rng);
  if (with_truth) {
    std::vector<std::uint8_t> t(m, 0);
    if (b.label) t[rng.below(m)] = 1;
    b.segment_truth = t;
  }
  return b;
}

/// Small but learnable data: 16 segments, 120 train and 40 test videos.
inline GenConfig small_gen(std::uint64_t seed = 0) {
  GenConfig gc;
  gc.train_count = 120;
  gc.test_count = 40;
  gc.seed = seed;
  return gc;
}

/// Clean split, extracted features and trained artifacts shared by the
/// slower tests of one binary. Built once on first use.
struct TrainedBundle {
  SceneSplit scenes;
  std::vector<VideoBag> train;
  std::vector<VideoBag> test;
  AnomalyModel shared;
  AnomalyModel padding;
  AnomalyModel concat;
  CalibratedGmm audio_gmm;
  CalibratedGmm visual_gmm;

  ScoringModels scoring(const AnomalyModel& m) const { return {&m, &audio_gmm, &visual_gmm}; }
};

inline const TrainedBundle& trained_bundle() {
  static const TrainedBundle bundle = [] {
    TrainedBundle b;
    b.scenes = generate_dataset(small_gen(3));
    const ExtractorConfig ec;
    b.train = extract_all(b.scenes.train, ec);
    b.test = extract_all(b.scenes.test, ec);
    TrainConfig tc;
    tc.epochs = 20;
    tc.seed = 3;
    b.shared = train_shared(b.train, tc, ModelVariant::SharedProjection);
    b.padding = train_shared(b.train, tc, ModelVariant::SharedPadding);
    b.concat = train_concat(b.train, tc);
    GmmFitOptions go;
    go.seed = 3;
    for (auto [mod, dst] : {std::pair{Modality::Audio, &b.audio_gmm}, std::pair{Modality::Visual, &b.visual_gmm}}) {
      const Matrix x = stack_segments(b.train, mod);
      dst->gmm = fit_gmm(x, mod, go).params;
      dst->calibration = calibrate_sigmoid(nll_rows(x, dst->gmm));
    }
    return b;
  }();
  return bundle;
}

}  // namespace robusta::testing
