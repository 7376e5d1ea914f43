#include "robusta/corruptions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "robusta/binary_io.hpp"
#include "robusta/error.hpp"
#include "robusta/fft.hpp"
#include "robusta/rng.hpp"

namespace robusta {

namespace {

constexpr const char* kModule = "corruptions";
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct KindInfo {
  CorruptionKind kind;
  std::string_view name;
  std::array<double, 5> ladder;
};

// Severity ladders, index = severity - 1.
constexpr std::array<KindInfo, 16> kKinds = {{
    {CorruptionKind::BitError, "bit_error", {0.001, 0.005, 0.01, 0.05, 0.1}},
    {CorruptionKind::Brightness, "brightness", {0.1, 0.2, 0.3, 0.4, 0.5}},
    {CorruptionKind::Contrast, "contrast", {0.7, 0.55, 0.4, 0.3, 0.2}},
    {CorruptionKind::Fog, "fog", {0.15, 0.3, 0.45, 0.6, 0.75}},
    {CorruptionKind::Rain, "rain", {0.02, 0.04, 0.07, 0.10, 0.14}},
    {CorruptionKind::MotionBlur, "motion_blur", {3, 5, 7, 9, 11}},
    {CorruptionKind::Saturate, "saturate", {0.7, 0.55, 0.4, 0.3, 0.2}},
    {CorruptionKind::ShotNoise, "shot_noise", {60, 25, 12, 5, 3}},
    {CorruptionKind::Babble, "babble", {20, 15, 10, 5, 0}},
    {CorruptionKind::Bitrate, "bitrate", {12, 10, 8, 6, 4}},
    {CorruptionKind::HfChannel, "hfchannel", {0.1, 0.2, 0.3, 0.4, 0.5}},
    {CorruptionKind::Pink, "pink", {20, 15, 10, 5, 0}},
    {CorruptionKind::PitchShift, "pitch_shift", {1, 2, 3, 4, 5}},
    {CorruptionKind::RandomDropout, "random_dropout", {0.10, 0.20, 0.35, 0.50, 0.70}},
    {CorruptionKind::Reverb, "reverb", {0.1, 0.2, 0.4, 0.7, 1.0}},
    {CorruptionKind::White, "white", {20, 15, 10, 5, 0}},
}};

const KindInfo& info(CorruptionKind kind) {
  return kKinds[static_cast<std::size_t>(kind)];
}

void check_severity(int severity) {
  if (severity < kMinSeverity || severity > kMaxSeverity) {
    throw ContractError(kModule, "severity " + std::to_string(severity) + " outside 1..5");
  }
}

double rms_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double ss = 0.0;
  for (double v : x) ss += v * v;
  return std::sqrt(ss / static_cast<double>(x.size()));
}

std::vector<double> to_double(std::span<const float> x) {
  return std::vector<double>(x.begin(), x.end());
}

std::vector<float> to_float_clipped(std::span<const double> x, double lo, double hi) {
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<float>(std::clamp(x[i], lo, hi));
  return out;
}

std::vector<double> requantize(std::span<const double> x, double bits) {
  const double levels = std::exp2(bits - 1.0);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::round(x[i] * levels) / levels;
  return y;
}

std::vector<double> high_pass(std::span<const double> x, double cutoff_fraction) {
  auto bins = fft::rfft(x);
  const std::size_t nyquist_bin = bins.size() - 1;
  const auto cut = static_cast<std::size_t>(std::ceil(cutoff_fraction * static_cast<double>(nyquist_bin)));
  for (std::size_t k = 0; k < std::min(cut, bins.size()); ++k) bins[k] = 0.0;
  return fft::irfft(bins, x.size());
}

std::vector<double> pitch_shift(std::span<const double> x, double semitones, std::uint64_t seed) {
  Rng rng(seed);
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double factor = std::exp2(sign * semitones / 12.0);
  // Reading the input `factor` times faster raises pitch by `factor`; the
  // result is then trimmed or zero-padded back to the input length.
  std::vector<double> y(x.size(), 0.0);
  const double last = static_cast<double>(x.size() - 1);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double pos = static_cast<double>(i) * factor;
    if (pos > last) break;
    const auto i0 = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i0);
    const double a = x[i0];
    const double b = i0 + 1 < x.size() ? x[i0 + 1] : a;
    y[i] = a + frac * (b - a);
  }
  return y;
}

std::vector<double> reverb(std::span<const double> x, std::uint32_t sample_rate, double rt60,
                           std::uint64_t seed) {
  Rng rng(seed);
  const auto len = static_cast<std::size_t>(std::ceil(rt60 * sample_rate));
  std::vector<double> ir(std::max<std::size_t>(len, 1));
  ir[0] = 1.0;
  // 60 dB amplitude decay over rt60 seconds.
  const double decay = std::log(1000.0) / (rt60 * sample_rate);
  for (std::size_t n = 1; n < ir.size(); ++n) {
    ir[n] = 0.5 * rng.normal() * std::exp(-decay * static_cast<double>(n));
  }
  auto wet = fft::convolve(x, ir);
  wet.resize(x.size());
  double peak_in = 0.0, peak_out = 0.0;
  for (double v : x) peak_in = std::max(peak_in, std::abs(v));
  for (double v : wet) peak_out = std::max(peak_out, std::abs(v));
  if (peak_out > 0.0) {
    const double g = peak_in / peak_out;
    for (double& v : wet) v *= g;
  }
  return wet;
}

// Smooth low-frequency field normalised to [0.6, 1].
std::vector<double> fog_field(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves(4);
  for (auto& w : waves) {
    w.fx = rng.uniform(0.2, 1.5);
    w.fy = rng.uniform(0.2, 1.5);
    w.phase = rng.uniform(0.0, kTwoPi);
    w.amp = rng.uniform(0.5, 1.0);
  }
  std::vector<double> field(height * width);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      double v = 0.0;
      for (const auto& w : waves) {
        v += w.amp * std::cos(kTwoPi * (w.fx * static_cast<double>(x) / static_cast<double>(width) +
                                        w.fy * static_cast<double>(y) / static_cast<double>(height)) +
                              w.phase);
      }
      field[y * width + x] = v;
    }
  }
  const auto [lo, hi] = std::minmax_element(field.begin(), field.end());
  const double span = *hi - *lo;
  const double low = *lo;
  for (double& v : field) v = 0.6 + 0.4 * (span > 0.0 ? (v - low) / span : 1.0);
  return field;
}

void rain(std::span<double> frame, std::size_t height, std::size_t width, double coverage, Rng& rng) {
  const auto target = static_cast<std::size_t>(std::llround(coverage * static_cast<double>(height * width)));
  constexpr std::size_t kStreak = 5;
  std::vector<std::uint8_t> mask(height * width, 0);
  std::size_t covered = 0;
  while (covered < target) {
    const std::size_t x0 = rng.below(width);
    const std::size_t y0 = rng.below(height);
    for (std::size_t k = 0; k < kStreak && covered < target; ++k) {
      const std::size_t y = y0 + k;
      const std::size_t x = x0 + k;
      if (y >= height || x >= width) break;
      if (!mask[y * width + x]) {
        mask[y * width + x] = 1;
        ++covered;
      }
    }
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) frame[i] = 0.9;
  }
}

void motion_blur(std::span<double> frame, std::size_t height, std::size_t width, std::size_t length,
                 int direction) {
  static constexpr int kDx[4] = {1, 0, 1, 1};
  static constexpr int kDy[4] = {0, 1, 1, -1};
  const int dx = kDx[direction];
  const int dy = kDy[direction];
  const int radius = static_cast<int>(length / 2);
  const std::vector<double> src(frame.begin(), frame.end());
  const int h = static_cast<int>(height), w = static_cast<int>(width);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k * dy, 0, h - 1);
        const int xx = std::clamp(x + k * dx, 0, w - 1);
        acc += src[static_cast<std::size_t>(yy * w + xx)];
      }
      frame[static_cast<std::size_t>(y * w + x)] = acc / static_cast<double>(2 * radius + 1);
    }
  }
}

}  // namespace

Modality modality_of(CorruptionKind kind) noexcept {
  return static_cast<std::uint8_t>(kind) < static_cast<std::uint8_t>(CorruptionKind::Babble)
             ? Modality::Visual
             : Modality::Audio;
}

std::string_view to_string(CorruptionKind kind) noexcept { return info(kind).name; }

std::optional<CorruptionKind> parse_corruption_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  if (name == "dropout") return CorruptionKind::RandomDropout;
  if (name == "overlay") return CorruptionKind::Babble;
  return std::nullopt;
}

bool is_allowed_fraction(double fraction) noexcept {
  return std::any_of(kCorruptionLevels.begin(), kCorruptionLevels.end(),
                     [&](double l) { return std::abs(l - fraction) < 1e-9; });
}

void validate_spec(const CorruptionSpec& spec) {
  check_severity(spec.severity);
  if (!is_allowed_fraction(spec.fraction)) {
    throw ContractError(kModule, "fraction " + std::to_string(spec.fraction) +
                                     " not in {0, 0.1, 0.3, 0.5, 0.7, 0.9, 1}");
  }
}

double severity_parameter(CorruptionKind kind, int severity) {
  check_severity(severity);
  return info(kind).ladder[static_cast<std::size_t>(severity - 1)];
}

namespace corrupt {

std::vector<double> mix_at_snr(std::span<const double> signal, std::span<const double> noise,
                               double snr_db) {
  if (signal.size() != noise.size()) throw ContractError(kModule, "signal/noise length mismatch");
  const double sig = rms_of(signal);
  const double nz = rms_of(noise);
  const double gain = nz > 0.0 ? sig * std::pow(10.0, -snr_db / 20.0) / nz : 0.0;
  std::vector<double> out(signal.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = signal[i] + gain * noise[i];
  return out;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

std::vector<double> pink_noise(std::size_t n, std::uint64_t seed) {
  auto bins = fft::rfft(white_noise(n, seed));
  bins[0] = 0.0;
  // 1/f power means 1/sqrt(f) amplitude.
  for (std::size_t k = 1; k < bins.size(); ++k) bins[k] /= std::sqrt(static_cast<double>(k));
  return fft::irfft(bins, n);
}

std::vector<double> babble_noise(std::size_t n, std::uint32_t sample_rate, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> mix(n, 0.0);
  constexpr int kTracks = 4;
  constexpr int kHarmonics = 6;
  for (int t = 0; t < kTracks; ++t) {
    const double f0 = rng.uniform(90.0, 250.0);
    const double am_rate = rng.uniform(2.0, 5.0);
    const double am_phase = rng.uniform(0.0, kTwoPi);
    std::array<double, kHarmonics> phase{};
    for (auto& p : phase) p = rng.uniform(0.0, kTwoPi);
    for (std::size_t i = 0; i < n; ++i) {
      const double time = static_cast<double>(i) / sample_rate;
      const double env = 0.5 + 0.5 * std::sin(kTwoPi * am_rate * time + am_phase);
      double v = 0.0;
      for (int h = 1; h <= kHarmonics; ++h) {
        v += std::sin(kTwoPi * f0 * h * time + phase[static_cast<std::size_t>(h - 1)]) / h;
      }
      mix[i] += env * v;
    }
  }
  return mix;
}

std::vector<double> random_dropout(std::span<const double> signal, double fraction,
                                   std::uint64_t seed) {
  const std::size_t n = signal.size();
  std::vector<double> out(signal.begin(), signal.end());
  const auto total = static_cast<std::size_t>(std::llround(std::clamp(fraction, 0.0, 1.0) * static_cast<double>(n)));
  if (total == 0) return out;
  constexpr std::size_t kChunkTarget = 160;  // 20 ms at 8 kHz, a lost packet
  const std::size_t chunks = std::max<std::size_t>(1, (total + kChunkTarget - 1) / kChunkTarget);
  // Split the kept samples into chunks+1 random gaps (stars and bars).
  Rng rng(seed);
  const std::size_t kept = n - total;
  std::vector<std::size_t> cuts(chunks);
  for (auto& c : cuts) c = static_cast<std::size_t>(rng.below(kept + 1));
  std::sort(cuts.begin(), cuts.end());
  std::size_t pos = 0, prev_cut = 0, dropped = 0;
  for (std::size_t c = 0; c < chunks; ++c) {
    pos += cuts[c] - prev_cut;
    prev_cut = cuts[c];
    const std::size_t len = total / chunks + (c < total % chunks ? 1 : 0);
    std::fill(out.begin() + static_cast<long>(pos), out.begin() + static_cast<long>(pos + len), 0.0);
    pos += len;
    dropped += len;
  }
  return out;
}

}  // namespace corrupt

std::vector<float> apply_audio(std::span<const float> waveform, std::uint32_t sample_rate,
                               CorruptionKind kind, double parameter, std::uint64_t seed) {
  if (modality_of(kind) != Modality::Audio) {
    throw ContractError(kModule, "visual corruption '" + std::string(to_string(kind)) +
                                     "' applied to audio");
  }
  if (waveform.empty()) return {};
  for (float v : waveform) {
    if (!std::isfinite(v)) throw ContractError(kModule, "non-finite audio sample");
  }
  const auto x = to_double(waveform);
  std::vector<double> y;
  switch (kind) {
    case CorruptionKind::White:
      y = corrupt::mix_at_snr(x, corrupt::white_noise(x.size(), seed), parameter);
      break;
    case CorruptionKind::Pink:
      y = corrupt::mix_at_snr(x, corrupt::pink_noise(x.size(), seed), parameter);
      break;
    case CorruptionKind::Babble:
      y = corrupt::mix_at_snr(x, corrupt::babble_noise(x.size(), sample_rate, seed), parameter);
      break;
    case CorruptionKind::Bitrate:
      y = requantize(x, parameter);
      break;
    case CorruptionKind::HfChannel:
      y = high_pass(x, parameter);
      break;
    case CorruptionKind::PitchShift:
      y = pitch_shift(x, parameter, seed);
      break;
    case CorruptionKind::RandomDropout:
      y = corrupt::random_dropout(x, parameter, seed);
      break;
    case CorruptionKind::Reverb:
      y = reverb(x, sample_rate, parameter, seed);
      break;
    default:
      throw ContractError(kModule, "unhandled audio corruption");
  }
  return to_float_clipped(y, -1.0, 1.0);
}

std::vector<float> apply_visual(std::span<const float> frames, std::size_t frame_count,
                                std::size_t height, std::size_t width, CorruptionKind kind,
                                double parameter, std::uint64_t seed) {
  if (modality_of(kind) != Modality::Visual) {
    throw ContractError(kModule, "audio corruption '" + std::string(to_string(kind)) +
                                     "' applied to frames");
  }
  const std::size_t px = height * width;
  if (frames.size() != frame_count * px) throw ContractError(kModule, "frame stack shape mismatch");
  auto img = to_double(frames);
  Rng rng(seed);
  switch (kind) {
    case CorruptionKind::Brightness:
      for (double& p : img) p += parameter;
      break;
    case CorruptionKind::Contrast:
      for (double& p : img) p = (p - 0.5) * parameter + 0.5;
      break;
    case CorruptionKind::Fog: {
      const auto field = fog_field(height, width, seed);
      for (std::size_t f = 0; f < frame_count; ++f) {
        for (std::size_t i = 0; i < px; ++i) {
          double& p = img[f * px + i];
          p = (1.0 - parameter) * p + parameter * field[i];
        }
      }
      break;
    }
    case CorruptionKind::Rain:
      for (std::size_t f = 0; f < frame_count; ++f) {
        rain(std::span<double>(img).subspan(f * px, px), height, width, parameter, rng);
      }
      break;
    case CorruptionKind::MotionBlur: {
      const int direction = static_cast<int>(rng.below(4));
      for (std::size_t f = 0; f < frame_count; ++f) {
        motion_blur(std::span<double>(img).subspan(f * px, px), height, width,
                    static_cast<std::size_t>(parameter), direction);
      }
      break;
    }
    case CorruptionKind::Saturate:
      for (double& p : img) p = std::pow(std::clamp(p, 0.0, 1.0), parameter);
      break;
    case CorruptionKind::ShotNoise:
      for (double& p : img) {
        p = static_cast<double>(rng.poisson(std::clamp(p, 0.0, 1.0) * parameter)) / parameter;
      }
      break;
    case CorruptionKind::BitError:
      for (double& p : img) {
        auto q = static_cast<unsigned>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
        for (unsigned bit = 0; bit < 8; ++bit) {
          if (rng.bernoulli(parameter)) q ^= (1u << bit);
        }
        p = static_cast<double>(q) / 255.0;
      }
      break;
    default:
      throw ContractError(kModule, "unhandled visual corruption");
  }
  return to_float_clipped(img, 0.0, 1.0);
}

std::vector<float> corrupt_audio(std::span<const float> waveform, std::uint32_t sample_rate,
                                 CorruptionKind kind, int severity, std::uint64_t seed) {
  if (modality_of(kind) != Modality::Audio) {
    throw ContractError(kModule, "visual corruption '" + std::string(to_string(kind)) +
                                     "' applied to audio");
  }
  return apply_audio(waveform, sample_rate, kind, severity_parameter(kind, severity), seed);
}

std::vector<float> corrupt_visual(std::span<const float> frames, std::size_t frame_count,
                                  std::size_t height, std::size_t width, CorruptionKind kind,
                                  int severity, std::uint64_t seed) {
  if (modality_of(kind) != Modality::Visual) {
    throw ContractError(kModule, "audio corruption '" + std::string(to_string(kind)) +
                                     "' applied to frames");
  }
  return apply_visual(frames, frame_count, height, width, kind, severity_parameter(kind, severity), seed);
}

RawScene corrupt_scene(const RawScene& scene, CorruptionKind kind, int severity, std::uint64_t seed) {
  RawScene out = scene;
  if (modality_of(kind) == Modality::Audio) {
    out.audio = corrupt_audio(scene.audio, scene.sample_rate, kind, severity, seed);
  } else {
    out.frames = corrupt_visual(scene.frames, scene.segments * scene.frames_per_segment,
                                scene.height, scene.width, kind, severity, seed);
  }
  return out;
}

std::uint64_t corruption_seed(std::uint64_t base_seed, CorruptionKind kind, std::string_view video_id) {
  return derive_seed(base_seed, std::string("corrupt/") + std::string(to_string(kind)), fnv1a64(video_id));
}

std::vector<std::size_t> corruption_order(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "select"));
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

std::vector<std::string> select_corrupted_subset(std::span<const std::string> video_ids,
                                                 double fraction, std::uint64_t seed) {
  if (!is_allowed_fraction(fraction)) {
    throw ContractError(kModule, "fraction " + std::to_string(fraction) +
                                     " not in {0, 0.1, 0.3, 0.5, 0.7, 0.9, 1}");
  }
  const auto order = corruption_order(video_ids.size(), seed);
  const auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(video_ids.size())));
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(video_ids[order[i]]);
  return out;
}

}  // namespace robusta
