#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "robusta/error.hpp"
#include "robusta/gmm.hpp"

namespace robusta {
namespace {

Matrix gaussian_blob(std::size_t n, std::size_t d, double center, double sd, Rng& rng) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = center + sd * rng.normal();
  }
  return x;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

GmmParams single(std::vector<double> mean, std::vector<double> var) {
  GmmParams g;
  const auto d = static_cast<Eigen::Index>(mean.size());
  g.weights = {1.0};
  g.means = Matrix(1, d);
  g.variances = Matrix(1, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    g.means(0, j) = mean[static_cast<std::size_t>(j)];
    g.variances(0, j) = var[static_cast<std::size_t>(j)];
  }
  return g;
}

// Brute-force density: sum of products of 1-D normal pdfs.
double density_oracle(const std::vector<double>& x, const GmmParams& g) {
  double p = 0.0;
  for (std::size_t k = 0; k < g.components(); ++k) {
    double prod = g.weights[k];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double v = g.variances(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
      const double diff = x[j] - g.means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
      prod *= std::exp(-0.5 * diff * diff / v) / std::sqrt(2.0 * std::numbers::pi * v);
    }
    p += prod;
  }
  return p;
}

TEST(FitGmm, IdenticalSamplesHitTheVarianceFloor) {
  const Matrix x = Matrix::Constant(40, 3, 0.7);
  GmmFitOptions opts;
  opts.components = 2;
  const auto fit = fit_gmm(x, Modality::Audio, opts);
  EXPECT_NO_THROW(validate_gmm(fit.params));
  for (Eigen::Index k = 0; k < 2; ++k) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(fit.params.variances(k, j), kVarianceFloor);
      EXPECT_NEAR(fit.params.means(k, j), 0.7, 1e-12);
    }
  }
  for (double ll : fit.log_likelihood) EXPECT_TRUE(std::isfinite(ll));
}

TEST(FitGmm, TooFewSamplesRejected) {
  Rng rng(1);
  const Matrix x = gaussian_blob(5, 2, 0.0, 1.0, rng);
  GmmFitOptions opts;
  opts.components = 8;
  EXPECT_THROW(fit_gmm(x, Modality::Visual, opts), ContractError);
  opts.components = 0;
  EXPECT_THROW(fit_gmm(x, Modality::Visual, opts), ContractError);
}

TEST(FitGmm, RecoversTwoSeparatedClusters) {
  Rng rng(2);
  const Matrix x = vstack(gaussian_blob(300, 2, -5.0, 1.0, rng), gaussian_blob(100, 2, 5.0, 0.5, rng));
  GmmFitOptions opts;
  opts.components = 2;
  const auto fit = fit_gmm(x, Modality::Visual, opts);
  const auto& g = fit.params;
  const Eigen::Index lo = g.means(0, 0) < g.means(1, 0) ? 0 : 1, hi = 1 - lo;
  EXPECT_NEAR(g.weights[static_cast<std::size_t>(lo)], 0.75, 0.02);
  for (Eigen::Index j = 0; j < 2; ++j) {
    EXPECT_NEAR(g.means(lo, j), -5.0, 0.2);
    EXPECT_NEAR(g.means(hi, j), 5.0, 0.2);
    EXPECT_NEAR(g.variances(lo, j), 1.0, 0.2);
    EXPECT_NEAR(g.variances(hi, j), 0.25, 0.07);
  }
  EXPECT_TRUE(fit.converged);
}

TEST(FitGmm, LogLikelihoodIsMonotone) {
  Rng rng(3);
  const Matrix x = vstack(gaussian_blob(200, 4, 0.0, 1.0, rng), gaussian_blob(200, 4, 1.5, 0.3, rng));
  GmmFitOptions opts;
  opts.components = 5;
  opts.tol = 0.0;
  opts.max_iter = 60;
  const auto fit = fit_gmm(x, Modality::Audio, opts);
  ASSERT_GE(fit.log_likelihood.size(), 2u);
  for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
    EXPECT_GE(fit.log_likelihood[i], fit.log_likelihood[i - 1] - 1e-9) << "iteration " << i;
  }
}

TEST(FitGmm, DeterministicAndSerialMatchesParallel) {
  set_thread_count(4);
  Rng rng(4);
  const Matrix x = gaussian_blob(500, 6, 0.0, 1.0, rng);
  GmmFitOptions opts;
  opts.seed = 9;
  const auto a = fit_gmm(x, Modality::Visual, opts, Exec::Serial);
  const auto b = fit_gmm(x, Modality::Visual, opts, Exec::Parallel);
  EXPECT_EQ(a.params.weights, b.params.weights);
  EXPECT_EQ(a.params.means, b.params.means);
  EXPECT_EQ(a.params.variances, b.params.variances);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
}

TEST(FitGmm, WeightsOnSimplexAndVariancesFloored) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = gaussian_blob(60 + 10 * static_cast<std::size_t>(trial), 3, 0.0, 0.001 + trial, rng);
    GmmFitOptions opts;
    opts.seed = static_cast<std::uint64_t>(trial);
    const auto g = fit_gmm(x, Modality::Audio, opts).params;
    double sum = 0.0;
    for (double w : g.weights) {
      EXPECT_GE(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_GE(g.variances.minCoeff(), kVarianceFloor);
  }
}

TEST(EStep, SerialMatchesParallelBitwise) {
  set_thread_count(4);
  Rng rng(6);
  const Matrix x = gaussian_blob(333, 5, 0.0, 1.0, rng);
  const auto g = fit_gmm(x, Modality::Audio, GmmFitOptions{}).params;
  std::vector<double> la, lb;
  Matrix ra, rb;
  gmm_estep(x, g, la, ra, Exec::Serial);
  gmm_estep(x, g, lb, rb, Exec::Parallel);
  EXPECT_EQ(la, lb);
  EXPECT_EQ(ra, rb);
  for (Eigen::Index i = 0; i < ra.rows(); ++i) EXPECT_NEAR(ra.row(i).sum(), 1.0, 1e-12);
}

TEST(Nll, StandardNormalClosedForm) {
  const auto g = single({0.0, 0.0}, {1.0, 1.0});
  const std::vector<double> origin = {0.0, 0.0};
  EXPECT_NEAR(nll(origin, g), std::log(2.0 * std::numbers::pi), 1e-12);
  const std::vector<double> x = {1.0, -2.0};
  EXPECT_NEAR(nll(x, g), std::log(2.0 * std::numbers::pi) + 2.5, 1e-12);
}

TEST(Nll, ScaledVarianceClosedForm) {
  const auto g = single({1.0}, {4.0});
  const std::vector<double> x = {3.0};
  EXPECT_NEAR(nll(x, g), 0.5 * std::log(2.0 * std::numbers::pi * 4.0) + 0.5, 1e-12);
}

TEST(Nll, TwoIdenticalComponentsEqualOne) {
  auto two = single({0.5, -1.0}, {0.3, 2.0});
  two.weights = {0.4, 0.6};
  two.means = Matrix(2, 2);
  two.means << 0.5, -1.0, 0.5, -1.0;
  two.variances = Matrix(2, 2);
  two.variances << 0.3, 2.0, 0.3, 2.0;
  const auto one = single({0.5, -1.0}, {0.3, 2.0});
  const std::vector<double> x = {0.1, 0.9};
  EXPECT_NEAR(nll(x, two), nll(x, one), 1e-12);
}

TEST(Nll, MatchesBruteForceDensityAndFloatOverload) {
  Rng rng(7);
  const Matrix data = gaussian_blob(200, 3, 0.0, 1.0, rng);
  GmmFitOptions opts;
  opts.components = 4;
  const auto g = fit_gmm(data, Modality::Visual, opts).params;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x = {rng.normal(), rng.normal(), rng.normal()};
    EXPECT_NEAR(nll(x, g), -std::log(density_oracle(x, g)), 1e-9);
    std::vector<float> xf(x.begin(), x.end());
    std::vector<double> xd(xf.begin(), xf.end());
    EXPECT_DOUBLE_EQ(nll(std::span<const float>(xf), g), nll(xd, g));
  }
}

TEST(Nll, FarPointStaysFinite) {
  const auto g = single({0.0}, {kVarianceFloor});
  const std::vector<double> x = {1e3};
  const double v = nll(x, g);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 1e11);
}

TEST(Nll, InvariantUnderComponentPermutation) {
  Rng rng(8);
  const Matrix data = gaussian_blob(200, 3, 0.0, 1.0, rng);
  GmmFitOptions opts;
  opts.components = 4;
  const auto g = fit_gmm(data, Modality::Visual, opts).params;
  GmmParams p = g;
  const std::vector<Eigen::Index> perm = {2, 0, 3, 1};
  for (std::size_t k = 0; k < 4; ++k) {
    p.weights[k] = g.weights[static_cast<std::size_t>(perm[k])];
    p.means.row(static_cast<Eigen::Index>(k)) = g.means.row(perm[k]);
    p.variances.row(static_cast<Eigen::Index>(k)) = g.variances.row(perm[k]);
  }
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x = {rng.normal(), rng.normal(), rng.normal()};
    EXPECT_NEAR(nll(x, g), nll(x, p), 1e-10);
  }
}

TEST(Nll, DimensionMismatch) {
  const auto g = single({0.0, 0.0}, {1.0, 1.0});
  const std::vector<double> x = {1.0, 2.0, 3.0};
  EXPECT_THROW(nll(x, g), ContractError);
}

TEST(ValidateGmm, RejectsBrokenParameters) {
  auto g = single({0.0}, {1.0});
  EXPECT_NO_THROW(validate_gmm(g));
  auto off = g;
  off.weights = {0.9};
  EXPECT_THROW(validate_gmm(off), ValidationError);
  auto low = g;
  low.variances(0, 0) = 1e-8;
  EXPECT_THROW(validate_gmm(low), ValidationError);
}

TEST(SampleQuantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(sample_quantile({3.0, 1.0, 2.0}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(sample_quantile({0.0, 10.0}, 0.95), 9.5);
  EXPECT_DOUBLE_EQ(sample_quantile({4.0}, 0.9), 4.0);
  EXPECT_THROW(sample_quantile({}, 0.5), ContractError);
}

TEST(Calibration, QuantileMapsToTargetWeight) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> nlls(300);
    for (auto& v : nlls) v = 50.0 + 10.0 * rng.normal() + 3.0 * rng.uniform() * trial;
    const double target = 0.3 + 0.01 * trial;
    const auto cal = calibrate_sigmoid(nlls, target, 0.95);
    const double q = sample_quantile(nlls, 0.95);
    EXPECT_NEAR(0.5 / (1.0 + std::exp(cal.scale * (q + cal.shift))), target, 1e-12);
    EXPECT_GT(cal.scale, 0.0);
  }
}

TEST(Calibration, EqualValuesStayFinite) {
  const std::vector<double> same(50, 12.0);
  const auto cal = calibrate_sigmoid(same);
  EXPECT_TRUE(std::isfinite(cal.scale) && cal.scale > 0.0);
  EXPECT_TRUE(std::isfinite(cal.shift));
  EXPECT_NEAR(0.5 / (1.0 + std::exp(cal.scale * (12.0 + cal.shift))), 0.45, 1e-9);
}

TEST(Calibration, BadArguments) {
  const std::vector<double> v = {1.0, 2.0, 3.0};
  EXPECT_THROW(calibrate_sigmoid({}), ContractError);
  EXPECT_THROW(calibrate_sigmoid(v, 0.5), ContractError);
  EXPECT_THROW(calibrate_sigmoid(v, 0.25), ContractError);
  EXPECT_THROW(calibrate_sigmoid(v, 0.45, 0.4), ContractError);
  const std::vector<double> bad = {1.0, NAN};
  EXPECT_THROW(calibrate_sigmoid(bad), ContractError);
}

// On held-out clean data the calibrated weight should mostly stay high.
TEST(Calibration, CleanHeldOutSegmentsKeepHighWeight) {
  const auto& tb = testing::trained_bundle();
  for (auto [mod, cg] : {std::pair{Modality::Audio, &tb.audio_gmm}, std::pair{Modality::Visual, &tb.visual_gmm}}) {
    const Matrix x = stack_segments(tb.test, mod);
    const auto nlls = nll_rows(x, cg->gmm);
    std::size_t high = 0;
    for (double v : nlls) {
      if (0.5 / (1.0 + std::exp(cg->calibration.scale * (v + cg->calibration.shift))) >= 0.4) ++high;
    }
    EXPECT_GE(static_cast<double>(high), 0.9 * static_cast<double>(nlls.size())) << to_string(mod);
  }
}

TEST(StackSegments, RowsFollowBagOrder) {
  Rng rng(10);
  std::vector<VideoBag> bags;
  for (int i = 0; i < 3; ++i) bags.push_back(testing::random_bag("v" + std::to_string(i), 4, 2, 3, rng));
  const Matrix a = stack_segments(bags, Modality::Audio);
  ASSERT_EQ(a.rows(), 12);
  ASSERT_EQ(a.cols(), 2);
  EXPECT_EQ(a(5, 1), static_cast<double>(bags[1].audio->at(1, 1)));
  EXPECT_EQ(stack_segments(bags, Modality::Visual).cols(), 3);
}

}  // namespace
}  // namespace robusta
