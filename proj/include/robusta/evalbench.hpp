#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robusta/corruptions.hpp"
#include "robusta/detector.hpp"
#include "robusta/extractors.hpp"
#include "robusta/fusion.hpp"
#include "robusta/parallel.hpp"

namespace robusta {

/// Mean over positives of the precision at that positive's rank, ranking by
/// descending score with ties kept in input order.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> truth);

/// Segment-level AP over every segment of every bag.
double evaluate(std::span<const VideoBag> test_bags, const ScoringModels& models, FusionScheme scheme,
                Exec exec = Exec::Parallel);

/// One row group of the sweep: a single kind, a round-robin mix of every kind
/// of one modality, a dropped modality, or one visual plus one audio kind.
struct SweepCondition {
  enum class Type { Single, Mixed, Missing, Dual };
  Type type = Type::Single;
  std::vector<CorruptionKind> kinds;
  Modality modality = Modality::Visual;  // Mixed and Missing only

  std::string name() const;
  /// "audio", "visual" or "audio+visual".
  std::string modality_label() const;
};

/// Accepts a kind name ("fog"), "mixed_audio", "missing_visual" or a dual
/// pair "motion_blur+babble" (either order).
SweepCondition parse_sweep_condition(std::string_view text);
/// The 16 single-kind conditions, visual first.
std::vector<SweepCondition> single_kind_conditions();

struct SweepConfig {
  std::vector<SweepCondition> conditions;
  std::vector<double> levels{kCorruptionLevels.begin(), kCorruptionLevels.end()};
  int severity = kDefaultSeverity;
  std::vector<FusionScheme> schemes;
  std::vector<ModelVariant> variants;
  std::uint64_t seed = 0;
};

void validate_config(const SweepConfig& cfg);

struct SweepRow {
  std::string kind;
  std::string modality;
  double level = 0.0;
  FusionScheme scheme = FusionScheme::Dynamic;
  ModelVariant variant = ModelVariant::SharedProjection;
  double ap = 0.0;
  std::size_t n_segments = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;

  /// Header kind,modality,level,scheme,variant,ap,n_segments.
  std::string to_csv() const;
  /// First row matching every key; throws ContractError when absent.
  const SweepRow& find(std::string_view kind, double level, FusionScheme scheme, ModelVariant variant) const;
};

/// Trained artifacts for a sweep; one model per variant in the config.
struct SweepModels {
  std::vector<const AnomalyModel*> models;
  const CalibratedGmm* audio = nullptr;
  const CalibratedGmm* visual = nullptr;
};

/// Rows for every (condition, level, scheme, variant) where the scheme
/// accepts the variant, in that nesting order. Each video is corrupted and
/// re-extracted once per condition; the corrupted set at each level is the
/// prefix chosen by select_corrupted_subset.
SweepReport run_sweep(const SweepConfig& cfg, std::span<const RawScene> clean_test, const SweepModels& models,
                      const ExtractorConfig& extractor, Exec exec = Exec::Parallel);

}  // namespace robusta
