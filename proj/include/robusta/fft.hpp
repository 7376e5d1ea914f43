#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace robusta::fft {

/// Forward real DFT, n/2+1 unnormalized bins. Safe to call from OpenMP
/// workers: plans are cached per size behind a mutex and executed on
/// caller-owned buffers.
std::vector<std::complex<double>> rfft(std::span<const double> x);

/// Inverse of rfft, normalized so irfft(rfft(x), x.size()) == x.
std::vector<double> irfft(std::span<const std::complex<double>> bins, std::size_t n);

/// Linear convolution, output length a.size() + b.size() - 1.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

std::size_t next_pow2(std::size_t n);

}  // namespace robusta::fft
