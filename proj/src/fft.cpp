#include "robusta/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "robusta/error.hpp"

namespace robusta::fft {

namespace {

struct FftwBuffer {
  void* ptr = nullptr;
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* real() { return static_cast<double*>(ptr); }
  fftw_complex* cplx() { return static_cast<fftw_complex*>(ptr); }
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, bool forward) {
    std::lock_guard lock(mu_);
    const auto key = std::make_pair(n, forward);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    FftwBuffer re(sizeof(double) * n);
    FftwBuffer cx(sizeof(fftw_complex) * (n / 2 + 1));
    const int ni = static_cast<int>(n);
    fftw_plan plan = forward
        ? fftw_plan_dft_r2c_1d(ni, re.real(), cx.cplx(), FFTW_ESTIMATE)
        : fftw_plan_dft_c2r_1d(ni, cx.cplx(), re.real(), FFTW_ESTIMATE);
    if (!plan) throw Error("fft", "failed to create FFTW plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  fftw_plan plan = cache().get(n, true);
  FftwBuffer in(sizeof(double) * n);
  FftwBuffer out(sizeof(fftw_complex) * (n / 2 + 1));
  std::copy(x.begin(), x.end(), in.real());
  fftw_execute_dft_r2c(plan, in.real(), out.cplx());
  std::vector<std::complex<double>> bins(n / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    bins[k] = {out.cplx()[k][0], out.cplx()[k][1]};
  }
  return bins;
}

std::vector<double> irfft(std::span<const std::complex<double>> bins, std::size_t n) {
  if (n == 0) return {};
  if (bins.size() != n / 2 + 1) throw ContractError("fft", "irfft bin count does not match n");
  fftw_plan plan = cache().get(n, false);
  FftwBuffer in(sizeof(fftw_complex) * (n / 2 + 1));
  FftwBuffer out(sizeof(double) * n);
  for (std::size_t k = 0; k < bins.size(); ++k) {
    in.cplx()[k][0] = bins[k].real();
    in.cplx()[k][1] = bins[k].imag();
  }
  fftw_execute_dft_c2r(plan, in.cplx(), out.real());
  std::vector<double> y(out.real(), out.real() + n);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : y) v *= scale;
  return y;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = next_pow2(out_len);
  std::vector<double> pa(n, 0.0), pb(n, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  auto fa = rfft(pa);
  const auto fb = rfft(pb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  auto y = irfft(fa, n);
  y.resize(out_len);
  return y;
}

}  // namespace robusta::fft
