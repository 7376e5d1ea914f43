#include "robusta/extractors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "robusta/error.hpp"
#include "robusta/fft.hpp"

namespace robusta {

namespace {

constexpr const char* kModule = "extractors";

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_edges(std::uint32_t sample_rate, std::size_t count) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(count + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(count + 1));
  }
  return edges;
}

/// Dense [filter][bin] triangular weights for an n-point real spectrum.
class Filterbank {
 public:
  Filterbank(std::size_t n, std::uint32_t sample_rate, std::size_t count)
      : bins_(n / 2 + 1), count_(count), weights_(count * bins_, 0.0) {
    const auto edges = mel_edges(sample_rate, count);
    const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n);
    for (std::size_t j = 0; j < count; ++j) {
      const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
      for (std::size_t k = 0; k < bins_; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        double w = 0.0;
        if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
        else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
        weights_[j * bins_ + k] = w;
      }
    }
  }

  std::vector<double> apply(std::span<const double> power) const {
    std::vector<double> e(count_, 0.0);
    for (std::size_t j = 0; j < count_; ++j) {
      const double* w = weights_.data() + j * bins_;
      double acc = 0.0;
      for (std::size_t k = 0; k < bins_; ++k) acc += w[k] * power[k];
      e[j] = acc;
    }
    return e;
  }

 private:
  std::size_t bins_;
  std::size_t count_;
  std::vector<double> weights_;
};

std::vector<double> power_spectrum(std::span<const float> x) {
  const std::size_t n = x.size();
  std::vector<double> windowed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hann = n > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                     static_cast<double>(n - 1))
                              : 1.0;
    windowed[i] = hann * x[i];
  }
  const auto bins = fft::rfft(windowed);
  std::vector<double> p(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) p[k] = std::norm(bins[k]) / static_cast<double>(n);
  return p;
}

std::vector<double> log_energies(const std::vector<double>& energies, double floor) {
  std::vector<double> out(energies.size());
  for (std::size_t j = 0; j < energies.size(); ++j) out[j] = std::log(std::max(energies[j], floor));
  return out;
}

}  // namespace

void validate_config(const ExtractorConfig& cfg) {
  auto fail = [](const std::string& what) { throw ValidationError(kModule, "invalid config: " + what); };
  if (cfg.audio_dim == 0 || cfg.visual_dim == 0) fail("feature dims must be positive");
  if (cfg.audio_dim >= cfg.visual_dim) fail("audio_dim must be smaller than visual_dim");
  if (cfg.filter_count == 0) fail("filter_count must be positive");
  if (cfg.audio_subframes == 0) fail("audio_subframes must be positive");
  if (cfg.grid == 0) fail("grid must be positive");
  if (!(cfg.log_floor > 0.0)) fail("log_floor must be positive");
}

std::vector<double> filter_centers(std::uint32_t sample_rate, std::size_t filter_count) {
  const auto edges = mel_edges(sample_rate, filter_count);
  return std::vector<double>(edges.begin() + 1, edges.end() - 1);
}

SegmentedModalityFeatures extract_audio_features(std::span<const float> audio, std::size_t segments,
                                                 std::uint32_t sample_rate, const ExtractorConfig& cfg) {
  validate_config(cfg);
  if (audio.empty()) throw ContractError(kModule, "empty audio");
  if (segments == 0 || audio.size() % segments != 0) {
    throw ContractError(kModule, "audio length " + std::to_string(audio.size()) +
                                     " does not split into " + std::to_string(segments) + " segments");
  }
  const std::size_t n = audio.size() / segments;
  const std::size_t sub = std::max<std::size_t>(1, n / cfg.audio_subframes);
  const std::size_t subframes = n / sub;
  const std::size_t nf = cfg.filter_count;
  const Filterbank full_bank(n, sample_rate, nf);
  const Filterbank sub_bank(sub, sample_rate, nf);
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n);

  SegmentedModalityFeatures out(Modality::Audio, segments, cfg.audio_dim);
  std::vector<double> row;
  for (std::size_t s = 0; s < segments; ++s) {
    const auto seg = audio.subspan(s * n, n);
    row.clear();

    const auto power = power_spectrum(seg);
    const auto full = log_energies(full_bank.apply(power), cfg.log_floor);
    row.insert(row.end(), full.begin(), full.end());

    std::vector<std::vector<double>> frames;
    for (std::size_t t = 0; t < subframes; ++t) {
      frames.push_back(log_energies(sub_bank.apply(power_spectrum(seg.subspan(t * sub, sub))), cfg.log_floor));
    }
    for (std::size_t j = 0; j < nf; ++j) {
      double mean = 0.0;
      for (const auto& f : frames) mean += f[j];
      mean /= static_cast<double>(subframes);
      double var = 0.0;
      for (const auto& f : frames) var += (f[j] - mean) * (f[j] - mean);
      row.push_back(std::sqrt(var / static_cast<double>(subframes)));
    }
    for (std::size_t j = 0; j < nf; ++j) {
      double delta = 0.0;
      for (std::size_t t = 1; t < subframes; ++t) delta += std::abs(frames[t][j] - frames[t - 1][j]);
      row.push_back(subframes > 1 ? delta / static_cast<double>(subframes - 1) : 0.0);
    }

    double energy = 0.0;
    std::size_t crossings = 0;
    for (std::size_t i = 0; i < n; ++i) {
      energy += static_cast<double>(seg[i]) * seg[i];
      if (i > 0 && ((seg[i] >= 0.0f) != (seg[i - 1] >= 0.0f))) ++crossings;
    }
    energy /= static_cast<double>(n);
    double total = 0.0, weighted = 0.0, log_sum = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
      total += power[k];
      weighted += power[k] * static_cast<double>(k) * bin_hz;
      log_sum += std::log(std::max(power[k], cfg.log_floor));
    }
    const double nyquist = sample_rate / 2.0;
    const double centroid = total > cfg.log_floor ? weighted / total / nyquist : 0.0;
    const double mean_power = total / static_cast<double>(power.size());
    const double flatness = mean_power > cfg.log_floor
                                ? std::exp(log_sum / static_cast<double>(power.size())) / mean_power
                                : 0.0;
    row.push_back(std::log(std::max(energy, cfg.log_floor)));
    row.push_back(static_cast<double>(crossings) / static_cast<double>(n));
    row.push_back(centroid);
    row.push_back(flatness);

    auto dst = out.row(s);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = j < row.size() ? static_cast<float>(row[j]) : 0.0f;
  }
  return out;
}

SegmentedModalityFeatures extract_visual_features(std::span<const float> frames, std::size_t segments,
                                                  std::size_t frames_per_segment, std::size_t height,
                                                  std::size_t width, const ExtractorConfig& cfg) {
  validate_config(cfg);
  if (segments == 0 || frames_per_segment == 0 || frames.empty()) throw ContractError(kModule, "no frames");
  const std::size_t px = height * width;
  if (frames.size() != segments * frames_per_segment * px) {
    throw ContractError(kModule, "frame stack does not match m x F x H x W");
  }

  std::vector<std::size_t> grids;
  for (std::size_t g = std::min({cfg.grid, height, width}); g >= 1; g /= 2) grids.push_back(g);

  SegmentedModalityFeatures out(Modality::Visual, segments, cfg.visual_dim);
  std::vector<double> row;
  const std::size_t F = frames_per_segment;
  for (std::size_t s = 0; s < segments; ++s) {
    const float* seg = frames.data() + s * F * px;
    row.clear();
    for (std::size_t g : grids) {
      const std::size_t cells = g * g;
      std::vector<double> means(cells), stds(cells), motion(cells);
      for (std::size_t cy = 0; cy < g; ++cy) {
        const std::size_t y0 = cy * height / g, y1 = (cy + 1) * height / g;
        for (std::size_t cx = 0; cx < g; ++cx) {
          const std::size_t x0 = cx * width / g, x1 = (cx + 1) * width / g;
          double sum = 0.0, sq = 0.0, diff = 0.0;
          for (std::size_t f = 0; f < F; ++f) {
            const float* frame = seg + f * px;
            for (std::size_t y = y0; y < y1; ++y) {
              for (std::size_t x = x0; x < x1; ++x) {
                const double v = frame[y * width + x];
                sum += v;
                sq += v * v;
                if (f > 0) diff += std::abs(v - static_cast<double>(frame[y * width + x - px]));
              }
            }
          }
          const double count = static_cast<double>((y1 - y0) * (x1 - x0));
          const double mean = sum / (count * static_cast<double>(F));
          const double var = std::max(0.0, sq / (count * static_cast<double>(F)) - mean * mean);
          const std::size_t c = cy * g + cx;
          means[c] = mean;
          stds[c] = std::sqrt(var);
          motion[c] = F > 1 ? diff / (count * static_cast<double>(F - 1)) : 0.0;
        }
      }
      row.insert(row.end(), means.begin(), means.end());
      row.insert(row.end(), stds.begin(), stds.end());
      row.insert(row.end(), motion.begin(), motion.end());
    }
    auto dst = out.row(s);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = j < row.size() ? static_cast<float>(row[j]) : 0.0f;
  }
  return out;
}

VideoBag extract_bag(const RawScene& scene, const ExtractorConfig& cfg) {
  VideoBag bag;
  bag.id = scene.id;
  bag.label = scene.label;
  bag.audio = extract_audio_features(scene.audio, scene.segments, scene.sample_rate, cfg);
  bag.visual = extract_visual_features(scene.frames, scene.segments, scene.frames_per_segment,
                                       scene.height, scene.width, cfg);
  if (!scene.segment_truth.empty()) bag.segment_truth = scene.segment_truth;
  return bag;
}

std::vector<VideoBag> extract_all(std::span<const RawScene> scenes, const ExtractorConfig& cfg, Exec exec) {
  std::vector<VideoBag> bags(scenes.size());
  parallel_for(scenes.size(), [&](std::size_t i) { bags[i] = extract_bag(scenes[i], cfg); }, exec);
  return bags;
}

}  // namespace robusta
