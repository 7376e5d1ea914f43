#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robusta/detector.hpp"
#include "robusta/gmm.hpp"
#include "robusta/types.hpp"

namespace robusta {

struct ModalityWeights {
  double audio = 0.5;
  double visual = 0.5;
};

/// 0.5 / (1 + exp(scale * (nll + shift))), kept strictly inside (0, 0.5).
double dynamic_weight(double nll_value, const SigmoidCalibration& cal);

/// Absent modality gets 0 and the present one exactly 1. With both present
/// the raws are divided by their sum, falling back to halves when both are
/// below 1e-12.
ModalityWeights normalize_weights(double raw_audio, double raw_visual, bool audio_present, bool visual_present);

/// S_i = w_A a_i + w_V v_i. An absent list contributes nothing.
std::vector<double> fuse(std::optional<std::span<const double>> audio_scores,
                         std::optional<std::span<const double>> visual_scores, const ModalityWeights& weights);
/// Per-segment weights.
std::vector<double> fuse(std::optional<std::span<const double>> audio_scores,
                         std::optional<std::span<const double>> visual_scores,
                         std::span<const ModalityWeights> weights);

enum class FusionScheme { NaiveAverage, Dynamic, ConcatBaseline };

std::string_view to_string(FusionScheme scheme);
/// Accepts "naive", "dynamic" and "concat".
FusionScheme parse_fusion_scheme(std::string_view name);
/// Which trained variants a scheme can be paired with.
bool scheme_accepts(FusionScheme scheme, ModelVariant variant);

/// Per-modality GMM plus its calibration.
struct CalibratedGmm {
  GmmParams gmm;
  SigmoidCalibration calibration;
};

/// Read-only bundle used to score videos. GMMs are only needed by Dynamic.
struct ScoringModels {
  const AnomalyModel* model = nullptr;
  const CalibratedGmm* audio = nullptr;
  const CalibratedGmm* visual = nullptr;
};

/// Everything a scheme needs for one video, computed once so that several
/// schemes can be fused from the same evidence.
struct VideoEvidence {
  std::size_t segments = 0;
  std::optional<std::vector<double>> audio_scores;
  std::optional<std::vector<double>> visual_scores;
  std::optional<std::vector<double>> audio_nll;
  std::optional<std::vector<double>> visual_nll;
  std::optional<std::vector<double>> concat_scores;
};

/// Runs the detectors, and for Dynamic the GMMs, needed by `scheme`.
VideoEvidence gather_evidence(const VideoBag& bag, const ScoringModels& models, FusionScheme scheme);

/// Per-segment trace; unimodal columns are empty for the concat baseline.
struct ScoreTrace {
  std::vector<double> audio;
  std::vector<double> visual;
  std::vector<ModalityWeights> weights;
  std::vector<double> fused;
};

ScoreTrace fuse_evidence(const VideoEvidence& evidence, const ScoringModels& models, FusionScheme scheme);

ScoreTrace score_video_trace(const VideoBag& bag, const ScoringModels& models, FusionScheme scheme);
std::vector<double> score_video(const VideoBag& bag, const ScoringModels& models, FusionScheme scheme);

/// CSV with header segment_index,audio_score,visual_score,lambda_a,lambda_v,fused.
std::string trace_csv(const ScoreTrace& trace);

}  // namespace robusta
