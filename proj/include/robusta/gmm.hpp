#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "robusta/detector.hpp"
#include "robusta/parallel.hpp"
#include "robusta/types.hpp"

namespace robusta {

inline constexpr double kVarianceFloor = 1e-6;

/// K-component diagonal-covariance Gaussian mixture. means and variances
/// are K x d.
struct GmmParams {
  Modality modality = Modality::Visual;
  std::vector<double> weights;
  Matrix means;
  Matrix variances;

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(means.cols()); }
};

/// Throws ValidationError unless weights lie on the simplex (1e-9), shapes
/// agree and every variance respects the floor.
void validate_gmm(const GmmParams& gmm, double variance_floor = kVarianceFloor);

/// Maps an NLL to a raw fusion weight: 0.5 / (1 + exp(scale * (nll + shift))).
struct SigmoidCalibration {
  double scale = 1.0;
  double shift = 0.0;
};

struct GmmFitOptions {
  std::size_t components = 8;
  std::uint64_t seed = 0;
  std::size_t max_iter = 200;
  /// Stop once the average log-likelihood improves by less than this.
  double tol = 1e-6;
  double variance_floor = kVarianceFloor;
};

struct GmmFit {
  GmmParams params;
  /// Per-sample average log-likelihood before each M-step (first entry is
  /// the initialisation), ending with the fitted parameters.
  std::vector<double> log_likelihood;
  std::size_t iterations = 0;
  bool converged = false;
};

/// EM with k-means++ seeding. `samples` is N x d, one feature vector per row.
GmmFit fit_gmm(const Matrix& samples, Modality modality, const GmmFitOptions& opts,
               Exec exec = Exec::Parallel);

/// Stacks every segment row of the given modality.
Matrix stack_segments(std::span<const VideoBag> bags, Modality modality);

/// -log sum_k pi_k N(x | mu_k, diag var_k), in log-space.
double nll(std::span<const double> x, const GmmParams& gmm);
double nll(std::span<const float> x, const GmmParams& gmm);
/// Per-row NLL of a feature matrix (one entry per segment).
std::vector<double> nll_rows(const SegmentedModalityFeatures& features, const GmmParams& gmm,
                             Exec exec = Exec::Serial);
std::vector<double> nll_rows(const Matrix& rows, const GmmParams& gmm, Exec exec = Exec::Serial);

/// E-step kernel: per-row log-likelihood and responsibilities (N x K).
/// Serial and Parallel agree bitwise.
void gmm_estep(const Matrix& samples, const GmmParams& gmm, std::vector<double>& row_loglik,
               Matrix& responsibilities, Exec exec);

/// Chooses (scale, shift) so that nll == quantile(clean_nlls, quantile) maps
/// to exactly target_clean_weight and the logistic midpoint (0.25) sits one
/// spread above it, spread = max(quantile - median, 1e-6). The target must
/// lie in (0.25, 0.5).
SigmoidCalibration calibrate_sigmoid(std::span<const double> clean_nlls,
                                     double target_clean_weight = 0.45, double quantile = 0.95);

/// Linear-interpolated sample quantile.
double sample_quantile(std::vector<double> values, double q);

}  // namespace robusta
