#include "robusta/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "robusta/error.hpp"
#include "robusta/rng.hpp"

namespace robusta {

namespace {

constexpr const char* kModule = "gmm";
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

/// log pi_k - 0.5 * sum_j (log 2pi + log var_kj), and 1/var.
struct Precomputed {
  std::vector<double> log_norm;
  Matrix inv_var;
};

Precomputed precompute(const GmmParams& g) {
  Precomputed p;
  const auto K = g.components();
  const auto d = g.dim();
  p.log_norm.resize(K);
  p.inv_var = g.variances.cwiseInverse();
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += kLog2Pi + std::log(g.variances(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)));
    p.log_norm[k] = std::log(g.weights[k]) - 0.5 * s;
  }
  return p;
}

template <typename T>
double component_logs(const T* x, const GmmParams& g, const Precomputed& p, double* out) {
  const auto K = g.components();
  const auto d = static_cast<Eigen::Index>(g.dim());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double* mu = g.means.data() + kk * d;
    const double* iv = p.inv_var.data() + kk * d;
    double q = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = static_cast<double>(x[j]) - mu[j];
      q += diff * diff * iv[j];
    }
    out[k] = p.log_norm[k] - 0.5 * q;
    best = std::max(best, out[k]);
  }
  return best;
}

template <typename T>
double loglik(const T* x, const GmmParams& g, const Precomputed& p, std::vector<double>& scratch) {
  scratch.resize(g.components());
  const double best = component_logs(x, g, p, scratch.data());
  if (!std::isfinite(best)) return best;
  double s = 0.0;
  for (double v : scratch) s += std::exp(v - best);
  return best + std::log(s);
}

void check_dim(std::size_t got, const GmmParams& g) {
  if (got != g.dim()) {
    throw ContractError(kModule, "feature dim " + std::to_string(got) + " != GMM dim " + std::to_string(g.dim()));
  }
}

GmmParams kmeanspp_init(const Matrix& X, Modality modality, const GmmFitOptions& opts) {
  const auto N = static_cast<std::size_t>(X.rows());
  const auto d = X.cols();
  const std::size_t K = opts.components;
  Rng rng(derive_seed(opts.seed, "gmm/init"));
  std::vector<std::size_t> centers;
  centers.push_back(rng.below(N));
  std::vector<double> dist(N, std::numeric_limits<double>::infinity());
  while (centers.size() < K) {
    const auto c = static_cast<Eigen::Index>(centers.back());
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double d2 = (X.row(static_cast<Eigen::Index>(i)) - X.row(c)).squaredNorm();
      dist[i] = std::min(dist[i], d2);
      total += dist[i];
    }
    if (total <= 0.0) {
      centers.push_back(rng.below(N));
      continue;
    }
    double u = rng.uniform() * total;
    std::size_t pick = N - 1;
    for (std::size_t i = 0; i < N; ++i) {
      u -= dist[i];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(pick);
  }

  GmmParams g;
  g.modality = modality;
  g.weights.assign(K, 1.0 / static_cast<double>(K));
  g.means.resize(static_cast<Eigen::Index>(K), d);
  for (std::size_t k = 0; k < K; ++k) g.means.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(centers[k]));
  const RowVector mean = X.colwise().mean();
  RowVector var = (X.rowwise() - mean).array().square().colwise().mean().matrix();
  var = var.cwiseMax(opts.variance_floor);
  g.variances = var.replicate(static_cast<Eigen::Index>(K), 1);
  return g;
}

// M-step: parallel over components, each accumulating over rows in order.
void mstep(const Matrix& X, const Matrix& R, GmmParams& g, double floor, Exec exec) {
  const auto N = X.rows();
  const auto d = X.cols();
  const auto K = static_cast<std::size_t>(R.cols());
  parallel_for(K, [&](std::size_t k) {
    const auto kk = static_cast<Eigen::Index>(k);
    double nk = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) nk += R(i, kk);
    g.weights[k] = nk / static_cast<double>(N);
    if (nk < 1e-12) return;  // starved component keeps its Gaussian
    std::vector<double> mu(static_cast<std::size_t>(d), 0.0), var(static_cast<std::size_t>(d), 0.0);
    for (Eigen::Index i = 0; i < N; ++i) {
      const double r = R(i, kk);
      if (r == 0.0) continue;
      const double* x = X.data() + i * d;
      for (Eigen::Index j = 0; j < d; ++j) mu[static_cast<std::size_t>(j)] += r * x[j];
    }
    for (auto& v : mu) v /= nk;
    for (Eigen::Index i = 0; i < N; ++i) {
      const double r = R(i, kk);
      if (r == 0.0) continue;
      const double* x = X.data() + i * d;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = x[j] - mu[static_cast<std::size_t>(j)];
        var[static_cast<std::size_t>(j)] += r * diff * diff;
      }
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      g.means(kk, j) = mu[static_cast<std::size_t>(j)];
      g.variances(kk, j) = std::max(var[static_cast<std::size_t>(j)] / nk, floor);
    }
  }, exec);
  // Renormalise away rounding drift.
  double total = 0.0;
  for (double w : g.weights) total += w;
  for (double& w : g.weights) w /= total;
}

}  // namespace

void validate_gmm(const GmmParams& g, double variance_floor) {
  auto fail = [](const std::string& what) { throw ValidationError(kModule, what); };
  if (g.components() < 1) fail("GMM needs at least one component");
  if (static_cast<std::size_t>(g.means.rows()) != g.components() || g.variances.rows() != g.means.rows() ||
      g.variances.cols() != g.means.cols()) {
    fail("GMM parameter shapes disagree");
  }
  double total = 0.0;
  for (double w : g.weights) {
    if (!(w >= 0.0)) fail("negative mixture weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("mixture weights do not sum to 1");
  for (Eigen::Index i = 0; i < g.variances.size(); ++i) {
    if (!(g.variances.data()[i] >= variance_floor * (1.0 - 1e-6))) fail("variance below floor");
  }
  if (!g.means.allFinite()) fail("non-finite mean");
}

Matrix stack_segments(std::span<const VideoBag> bags, Modality modality) {
  std::size_t rows = 0, d = 0;
  for (const auto& b : bags) {
    if (const auto* f = b.features(modality)) {
      rows += f->segments;
      d = f->dim;
    }
  }
  Matrix X(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  Eigen::Index r = 0;
  for (const auto& b : bags) {
    const auto* f = b.features(modality);
    if (!f) continue;
    if (f->dim != d) throw ContractError(kModule, "bags disagree on feature dim");
    for (std::size_t i = 0; i < f->segments; ++i, ++r) {
      for (std::size_t j = 0; j < d; ++j) X(r, static_cast<Eigen::Index>(j)) = f->at(i, j);
    }
  }
  return X;
}

void gmm_estep(const Matrix& X, const GmmParams& g, std::vector<double>& row_loglik, Matrix& R, Exec exec) {
  check_dim(static_cast<std::size_t>(X.cols()), g);
  const auto N = static_cast<std::size_t>(X.rows());
  const auto K = g.components();
  const auto p = precompute(g);
  row_loglik.assign(N, 0.0);
  R.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K));
  parallel_for(N, [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double* logs = R.data() + ii * static_cast<Eigen::Index>(K);
    const double best = component_logs(X.data() + ii * X.cols(), g, p, logs);
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += std::exp(logs[k] - best);
    const double ll = best + std::log(s);
    row_loglik[i] = ll;
    for (std::size_t k = 0; k < K; ++k) logs[k] = std::exp(logs[k] - ll);
  }, exec);
}

GmmFit fit_gmm(const Matrix& X, Modality modality, const GmmFitOptions& opts, Exec exec) {
  if (opts.components < 1) throw ContractError(kModule, "K must be >= 1");
  if (static_cast<std::size_t>(X.rows()) < opts.components) {
    throw ContractError(kModule, "need at least K=" + std::to_string(opts.components) + " samples, got " +
                                     std::to_string(X.rows()));
  }
  if (X.cols() < 1) throw ContractError(kModule, "empty feature vectors");
  if (!X.allFinite()) throw ContractError(kModule, "non-finite training features");

  GmmFit fit;
  fit.params = kmeanspp_init(X, modality, opts);
  std::vector<double> row_ll;
  Matrix R;
  auto average = [&] {
    double s = 0.0;
    for (double v : row_ll) s += v;
    return s / static_cast<double>(row_ll.size());
  };
  gmm_estep(X, fit.params, row_ll, R, exec);
  fit.log_likelihood.push_back(average());
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    mstep(X, R, fit.params, opts.variance_floor, exec);
    gmm_estep(X, fit.params, row_ll, R, exec);
    fit.log_likelihood.push_back(average());
    ++fit.iterations;
    const double gain = fit.log_likelihood.back() - fit.log_likelihood[fit.log_likelihood.size() - 2];
    if (gain < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

double nll(std::span<const double> x, const GmmParams& gmm) {
  check_dim(x.size(), gmm);
  std::vector<double> scratch;
  return -loglik(x.data(), gmm, precompute(gmm), scratch);
}

double nll(std::span<const float> x, const GmmParams& gmm) {
  check_dim(x.size(), gmm);
  std::vector<double> scratch;
  return -loglik(x.data(), gmm, precompute(gmm), scratch);
}

std::vector<double> nll_rows(const SegmentedModalityFeatures& f, const GmmParams& gmm, Exec exec) {
  check_dim(f.dim, gmm);
  const auto p = precompute(gmm);
  std::vector<double> out(f.segments);
  parallel_for(f.segments, [&](std::size_t i) {
    std::vector<double> scratch;
    out[i] = -loglik(f.row(i).data(), gmm, p, scratch);
  }, exec);
  return out;
}

std::vector<double> nll_rows(const Matrix& rows, const GmmParams& gmm, Exec exec) {
  check_dim(static_cast<std::size_t>(rows.cols()), gmm);
  const auto p = precompute(gmm);
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  parallel_for(out.size(), [&](std::size_t i) {
    std::vector<double> scratch;
    out[i] = -loglik(rows.data() + static_cast<Eigen::Index>(i) * rows.cols(), gmm, p, scratch);
  }, exec);
  return out;
}

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError(kModule, "quantile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

SigmoidCalibration calibrate_sigmoid(std::span<const double> clean_nlls, double target, double quantile) {
  if (clean_nlls.empty()) throw ContractError(kModule, "calibration needs at least one clean NLL");
  // The midpoint (0.25) sits above the quantile, so a decreasing curve needs
  // the target above 0.25.
  if (!(target > 0.25 && target < 0.5)) throw ContractError(kModule, "target clean weight must be in (0.25, 0.5)");
  if (!(quantile > 0.5 && quantile < 1.0)) throw ContractError(kModule, "quantile must be in (0.5, 1)");
  for (double v : clean_nlls) {
    if (!std::isfinite(v)) throw ContractError(kModule, "non-finite clean NLL");
  }
  std::vector<double> values(clean_nlls.begin(), clean_nlls.end());
  const double q = sample_quantile(values, quantile);
  const double median = sample_quantile(values, 0.5);
  const double spread = std::max(q - median, 1e-6);
  SigmoidCalibration cal;
  cal.scale = std::log(target / (0.5 - target)) / spread;
  cal.shift = -(q + spread);
  return cal;
}

}  // namespace robusta
