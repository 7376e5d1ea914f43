#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "robusta/types.hpp"

namespace robusta {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

/// Linear map from audio features into the visual feature space:
/// out = in * weight + bias, weight is d_A x d_V.
struct ProjectionParams {
  Matrix weight;
  RowVector bias;

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.rows()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.cols()); }
};

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  RowVector bias;
};

/// MLP anomaly detector: ReLU hidden layers, one logit, logistic output.
struct DetectorParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.rows());
  }
};

/// Per-dimension standardisation fitted on clean training features.
struct FeatureScaler {
  RowVector mean;
  RowVector inv_std;

  static FeatureScaler fit(std::span<const SegmentedModalityFeatures* const> blocks);
  static FeatureScaler identity(std::size_t dim);
  Matrix apply(const SegmentedModalityFeatures& f) const;
  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
};

enum class ModelVariant : std::uint8_t {
  /// Shared detector, audio mapped through a learned projection.
  SharedProjection = 0,
  /// Shared detector, audio zero-padded up to the visual width.
  SharedPadding = 1,
  /// Detector over concatenated audio || visual features.
  Concat = 2,
};

std::string_view to_string(ModelVariant v) noexcept;
std::optional<ModelVariant> parse_model_variant(std::string_view name);
bool is_shared(ModelVariant v) noexcept;

enum class SampleView : std::uint8_t { AudioView = 0, VisualView = 1, ConcatView = 2 };

inline std::size_t default_top_k(std::size_t segments) {
  return (segments + 15) / 16 + 1;
}

struct TrainConfig {
  std::size_t epochs = 50;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  double weight_decay = 1e-5;
  /// Unset means default_top_k(m).
  std::optional<std::size_t> top_k;
  std::vector<std::size_t> hidden = {128, 32};
  std::uint64_t seed = 0;
};

/// Throws ContractError on non-positive settings.
void validate_config(const TrainConfig& cfg);

/// Complete trained artifact: scalers, optional projection and the detector.
struct AnomalyModel {
  ModelVariant variant = ModelVariant::SharedProjection;
  std::size_t audio_dim = 0;
  std::size_t visual_dim = 0;
  FeatureScaler audio_scaler;
  FeatureScaler visual_scaler;
  std::optional<ProjectionParams> projection;
  DetectorParams detector;
  TrainConfig train_config;
  /// Mean per-sample loss before training, then after each epoch.
  std::vector<double> loss_history;

  /// Detector input for one view, before any projection (scaled audio for
  /// AudioView on the projection variant, detector-width rows otherwise).
  Matrix view_input(const VideoBag& bag, SampleView view) const;

  std::vector<double> score_audio(const SegmentedModalityFeatures& audio) const;
  std::vector<double> score_visual(const SegmentedModalityFeatures& visual) const;
  /// Concat variant only. An absent modality is zero-filled before scaling.
  std::vector<double> score_concat(const SegmentedModalityFeatures* audio,
                                   const SegmentedModalityFeatures* visual) const;
};

/// Row-wise affine map. Throws ContractError on shape mismatch.
Matrix project(const Matrix& audio, const ProjectionParams& params);
/// Per-segment scores in (0, 1). Throws ContractError on shape mismatch.
std::vector<double> forward_score(const Matrix& features, const DetectorParams& params);

inline constexpr double kMilEps = 1e-7;

struct MilLoss {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d score
};

/// Binary cross-entropy between the label and the mean of the k largest
/// (eps-clipped) scores. Ties go to the lowest index.
MilLoss mil_loss(std::span<const double> scores, std::uint8_t label, std::size_t k);

/// Indices of the k largest scores, ties broken by lowest index.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k);

/// Initialised model of the given variant, uniform Glorot weights, zero biases.
AnomalyModel init_model(ModelVariant variant, std::size_t audio_dim, std::size_t visual_dim,
                        const TrainConfig& cfg);

/// One shuffled epoch of (bag index, view) pairs. Shared variants enumerate
/// both views of every bag (2n samples), the concat variant one each.
std::vector<std::pair<std::size_t, SampleView>> epoch_samples(std::size_t bag_count,
                                                              ModelVariant variant,
                                                              std::uint64_t seed,
                                                              std::size_t epoch);

/// Sum of MIL losses over samples, and its gradient w.r.t. every parameter.
struct LossAndGradient {
  double loss = 0.0;
  std::optional<ProjectionParams> projection;
  DetectorParams detector;
};

struct PreparedSample {
  Matrix input;  // see AnomalyModel::view_input
  SampleView view = SampleView::VisualView;
  std::uint8_t label = 0;
};

PreparedSample prepare_sample(const AnomalyModel& model, const VideoBag& bag, SampleView view);

LossAndGradient loss_and_gradient(const AnomalyModel& model, std::span<const PreparedSample> samples,
                                  std::size_t top_k);
double total_loss(const AnomalyModel& model, std::span<const PreparedSample> samples,
                  std::size_t top_k);

/// Flattened view of every trainable scalar, in a fixed order.
std::vector<double*> parameter_pointers(AnomalyModel& model);
std::vector<const double*> gradient_pointers(const LossAndGradient& g);

/// Trains on concatenated features. Every bag needs both modalities.
AnomalyModel train_concat(std::span<const VideoBag> bags, const TrainConfig& cfg);
/// Trains the shared detector (and projection, for SharedProjection) on both
/// views of every bag.
AnomalyModel train_shared(std::span<const VideoBag> bags, const TrainConfig& cfg,
                          ModelVariant variant = ModelVariant::SharedProjection);
/// Continues training an initialised model (used by both trainers).
void fit_model(AnomalyModel& model, std::span<const VideoBag> bags, const TrainConfig& cfg);

struct GradientCheckOptions {
  std::size_t probes = 100;
  double step = 1e-4;
  std::uint64_t seed = 0;
  /// Added to every analytic gradient; used to prove the checker can fail.
  double analytic_bias = 0.0;
  /// Relative-error denominator floor.
  double floor = 1e-8;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
  std::size_t checked = 0;
  /// Probes whose +-step stencil crossed a ReLU kink, a clip boundary or a
  /// top-k reordering (the loss is not differentiable there).
  std::size_t skipped = 0;
};

/// Central-difference check of the full MIL loss gradient on random
/// parameter coordinates.
GradientCheckResult gradient_check(const AnomalyModel& model, std::span<const PreparedSample> samples,
                                   const GradientCheckOptions& opts = {});

}  // namespace robusta
