#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "robusta/corruptions.hpp"
#include "robusta/error.hpp"
#include "robusta/extractors.hpp"
#include "robusta/rng.hpp"

namespace robusta {
namespace {

constexpr std::uint32_t kRate = 8000;
constexpr std::size_t kN = 1024;

// Visual feature offsets for the default 32x32 frames and grid 8.
struct VisualBlock {
  std::size_t means, stds, motion, cells;
};
VisualBlock block_for_grid(std::size_t g) {
  std::size_t off = 0;
  for (std::size_t level = 8; level > g; level /= 2) off += 3 * level * level;
  return {off, off + g * g, off + 2 * g * g, g * g};
}

TEST(ExtractorConfig, Validation) {
  ExtractorConfig ok;
  EXPECT_NO_THROW(validate_config(ok));
  auto equal = ok;
  equal.audio_dim = equal.visual_dim;
  EXPECT_THROW(validate_config(equal), ValidationError);
  auto zero = ok;
  zero.audio_dim = 0;
  EXPECT_THROW(validate_config(zero), ValidationError);
}

TEST(AudioFeatures, SilenceHitsTheLogFloor) {
  const ExtractorConfig cfg;
  const std::vector<float> silent(4 * kN, 0.0f);
  const auto f = extract_audio_features(silent, 4, kRate, cfg);
  ASSERT_EQ(f.segments, 4u);
  ASSERT_EQ(f.dim, cfg.audio_dim);
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t j = 0; j < cfg.filter_count; ++j) {
      EXPECT_FLOAT_EQ(f.at(s, j), static_cast<float>(std::log(cfg.log_floor)));
    }
  }
}

TEST(AudioFeatures, Deterministic) {
  const ExtractorConfig cfg;
  std::vector<float> x(2 * kN);
  Rng rng(3);
  for (auto& v : x) v = static_cast<float>(0.1 * rng.normal());
  EXPECT_EQ(extract_audio_features(x, 2, kRate, cfg), extract_audio_features(x, 2, kRate, cfg));
}

// A tone at a filter's center frequency puts the most energy in that filter.
// Oracle: direct DFT magnitude of the windowed tone.
TEST(AudioFeatures, ToneAtCenterPeaksInItsFilter) {
  const ExtractorConfig cfg;
  const auto centers = filter_centers(kRate, cfg.filter_count);
  for (std::size_t j = 2; j < cfg.filter_count; j += 3) {
    std::vector<float> x(kN);
    for (std::size_t i = 0; i < kN; ++i) x[i] = static_cast<float>(0.5 * std::sin(2.0 * M_PI * centers[j] * i / kRate));
    const auto f = extract_audio_features(x, 1, kRate, cfg);
    std::size_t best = 0;
    for (std::size_t k = 1; k < cfg.filter_count; ++k) {
      if (f.at(0, k) > f.at(0, best)) best = k;
    }
    EXPECT_EQ(best, j) << "center " << centers[j] << " Hz";

    // The DFT bin nearest the tone dominates the spectrum.
    double peak_bin = 0.0, peak_mag = 0.0;
    for (std::size_t k = 0; k <= kN / 2; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t i = 0; i < kN; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (kN - 1));
        re += w * x[i] * std::cos(2.0 * M_PI * k * i / kN);
        im -= w * x[i] * std::sin(2.0 * M_PI * k * i / kN);
      }
      if (re * re + im * im > peak_mag) {
        peak_mag = re * re + im * im;
        peak_bin = static_cast<double>(k);
      }
    }
    EXPECT_NEAR(peak_bin * kRate / kN, centers[j], kRate / static_cast<double>(kN));
  }
}

TEST(AudioFeatures, LouderSegmentHasHigherLogEnergy) {
  const ExtractorConfig cfg;
  std::vector<float> x(2 * kN);
  Rng rng(4);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>((i < kN ? 0.01 : 0.2) * rng.normal());
  const auto f = extract_audio_features(x, 2, kRate, cfg);
  const std::size_t log_energy = 3 * cfg.filter_count;
  EXPECT_GT(f.at(1, log_energy), f.at(0, log_energy) + 5.0);
}

TEST(AudioFeatures, Errors) {
  const ExtractorConfig cfg;
  EXPECT_THROW(extract_audio_features({}, 1, kRate, cfg), ContractError);
  std::vector<float> x(1000, 0.0f);
  EXPECT_THROW(extract_audio_features(x, 3, kRate, cfg), ContractError);
}

TEST(VisualFeatures, ConstantFramesClosedForm) {
  const ExtractorConfig cfg;
  const std::vector<float> frames(2 * 4 * 32 * 32, 0.5f);
  const auto f = extract_visual_features(frames, 2, 4, 32, 32, cfg);
  ASSERT_EQ(f.dim, cfg.visual_dim);
  for (std::size_t g : {8u, 4u, 2u, 1u}) {
    const auto b = block_for_grid(g);
    for (std::size_t c = 0; c < b.cells; ++c) {
      EXPECT_FLOAT_EQ(f.at(0, b.means + c), 0.5f);
      EXPECT_FLOAT_EQ(f.at(0, b.stds + c), 0.0f);
      EXPECT_FLOAT_EQ(f.at(0, b.motion + c), 0.0f);
    }
  }
}

TEST(VisualFeatures, IdenticalFramesHaveNoMotion) {
  const ExtractorConfig cfg;
  std::vector<float> one(32 * 32);
  Rng rng(5);
  for (auto& p : one) p = static_cast<float>(rng.uniform());
  std::vector<float> frames;
  for (int f = 0; f < 4; ++f) frames.insert(frames.end(), one.begin(), one.end());
  const auto feat = extract_visual_features(frames, 1, 4, 32, 32, cfg);
  for (std::size_t g : {8u, 4u, 2u, 1u}) {
    const auto b = block_for_grid(g);
    for (std::size_t c = 0; c < b.cells; ++c) EXPECT_EQ(feat.at(0, b.motion + c), 0.0f);
  }
}

TEST(VisualFeatures, BrightPatchOwnsItsCell) {
  const ExtractorConfig cfg;
  std::vector<float> frames(4 * 32 * 32, 0.2f);
  // Cell (row 5, col 2) of the 8x8 grid spans y 20..23, x 8..11.
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t y = 20; y < 24; ++y) {
      for (std::size_t x = 8; x < 12; ++x) frames[f * 1024 + y * 32 + x] = 0.9f;
    }
  }
  const auto feat = extract_visual_features(frames, 1, 4, 32, 32, cfg);
  const auto b = block_for_grid(8);
  const std::size_t target = 5 * 8 + 2;
  for (std::size_t c = 0; c < b.cells; ++c) {
    if (c == target) continue;
    EXPECT_GT(feat.at(0, b.means + target), feat.at(0, b.means + c));
  }
}

TEST(VisualFeatures, Errors) {
  const ExtractorConfig cfg;
  EXPECT_THROW(extract_visual_features({}, 1, 4, 32, 32, cfg), ContractError);
  std::vector<float> wrong(100, 0.0f);
  EXPECT_THROW(extract_visual_features(wrong, 1, 4, 32, 32, cfg), ContractError);
}

GenConfig small() {
  GenConfig gc;
  gc.train_count = 4;
  gc.test_count = 6;
  return gc;
}

TEST(ExtractBag, ShapesTruthAndFiniteness) {
  const auto split = generate_dataset(small());
  const ExtractorConfig cfg;
  for (const auto& s : split.test) {
    const auto bag = extract_bag(s, cfg);
    EXPECT_NO_THROW(validate_bag(bag));
    ASSERT_TRUE(bag.audio && bag.visual && bag.segment_truth);
    EXPECT_EQ(bag.audio->segments, s.segments);
    EXPECT_EQ(bag.visual->dim, cfg.visual_dim);
    EXPECT_EQ(*bag.segment_truth, s.segment_truth);
  }
  EXPECT_FALSE(extract_bag(split.train[0], cfg).segment_truth.has_value());
}

TEST(ExtractAll, SerialAndParallelAgreeBitwise) {
  set_thread_count(4);
  const auto split = generate_dataset(small());
  const ExtractorConfig cfg;
  EXPECT_EQ(extract_all(split.test, cfg, Exec::Serial), extract_all(split.test, cfg, Exec::Parallel));
}

// Every corruption kind at severity 5 moves the features of its modality.
TEST(Sensitivity, SeverityFiveChangesFeatures) {
  const auto split = generate_dataset(small());
  const ExtractorConfig cfg;
  const auto& scene = split.test.front();
  const auto clean = extract_bag(scene, cfg);
  for (std::size_t k = 0; k < 16; ++k) {
    const auto kind = static_cast<CorruptionKind>(k);
    const auto bag = extract_bag(corrupt_scene(scene, kind, 5, 1), cfg);
    const auto& a = modality_of(kind) == Modality::Audio ? clean.audio->values : clean.visual->values;
    const auto& b = modality_of(kind) == Modality::Audio ? bag.audio->values : bag.visual->values;
    double dist = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dist += (a[i] - b[i]) * (a[i] - b[i]);
    EXPECT_GT(dist, 0.0) << to_string(kind);
  }
}

}  // namespace
}  // namespace robusta
