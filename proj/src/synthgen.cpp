#include "robusta/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "robusta/error.hpp"
#include "robusta/rng.hpp"

namespace robusta {

namespace {

constexpr const char* kModule = "synthgen";
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double reflect01(double v) {
  // Fold into [0, 2) then mirror the upper half.
  v = std::fmod(v, 2.0);
  if (v < 0.0) v += 2.0;
  return v > 1.0 ? 2.0 - v : v;
}

std::size_t positives_in_split(const GenConfig& cfg, bool train) {
  const auto total = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.video_count()) * cfg.anomaly_ratio));
  const auto in_train = std::min<std::size_t>(
      cfg.train_count, static_cast<std::size_t>(std::llround(
                           static_cast<double>(cfg.train_count) * cfg.anomaly_ratio)));
  if (train) return in_train;
  return std::min(cfg.test_count, total - std::min(total, in_train));
}

// Scale x in place so that its RMS equals target.
void set_rms(std::vector<double>& x, double target) {
  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double r = std::sqrt(ss / static_cast<double>(x.size()));
  if (r <= 0.0) return;
  const double g = target / r;
  for (double& v : x) v *= g;
}

std::vector<std::size_t> pick_event_segments(const GenConfig& cfg, Rng& rng) {
  const std::size_t m = cfg.segments;
  const std::size_t dur = cfg.event_duration;
  const std::size_t slots = m / dur;  // disjoint event slots
  const std::size_t max_events = std::max<std::size_t>(1, (m / 2) / dur);
  const std::size_t events = 1 + rng.below(std::min<std::size_t>(max_events, 3));
  std::vector<std::size_t> slot_ids(slots);
  std::iota(slot_ids.begin(), slot_ids.end(), 0);
  rng.shuffle(std::span<std::size_t>(slot_ids));
  std::vector<std::size_t> segs;
  for (std::size_t e = 0; e < events; ++e) {
    for (std::size_t k = 0; k < dur; ++k) segs.push_back(slot_ids[e] * dur + k);
  }
  std::sort(segs.begin(), segs.end());
  return segs;
}

// `events` marks segments rendered with an anomaly-like burst; distractors
// only go where there is none. Burst loudness is relative to the median RMS
// of the rendered segments outside `anomalous`, counting confuser bursts as
// louder than anything, so flagged bursts stay >= burst_min x that median.
void synth_audio(const GenConfig& cfg, Rng& rng, const std::vector<std::uint8_t>& events,
                 const std::vector<std::uint8_t>& anomalous, std::vector<float>& out) {
  const std::size_t m = cfg.segments;
  const std::size_t n = cfg.samples_per_segment;
  const double fs = cfg.sample_rate;
  const std::size_t total = m * n;

  const double bg_rms = rng.uniform(0.03, 0.07);
  const double hum_freq = rng.uniform(80.0, 300.0);
  const double hum_rel = rng.uniform(0.3, 0.6);

  // Band-limited background: white noise through two one-pole low-passes.
  std::vector<double> bg(total);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    s1 = 0.6 * s1 + 0.4 * rng.normal();
    s2 = 0.6 * s2 + 0.4 * s1;
    bg[i] = s2;
  }
  set_rms(bg, 1.0);
  const double hum_phase = rng.uniform(0.0, kTwoPi);
  for (std::size_t i = 0; i < total; ++i) {
    const double t = static_cast<double>(i) / fs;
    bg[i] = (bg[i] + hum_rel * std::sqrt(2.0) * std::sin(kTwoPi * hum_freq * t + hum_phase)) /
            std::sqrt(1.0 + hum_rel * hum_rel);
  }
  const double mod_phase = rng.uniform(0.0, kTwoPi);
  for (std::size_t s = 0; s < m; ++s) {
    const double level = bg_rms * (1.0 + 0.08 * std::sin(mod_phase + 0.4 * static_cast<double>(s)));
    for (std::size_t i = 0; i < n; ++i) bg[s * n + i] *= level;
  }

  std::vector<double> seg(n);
  std::vector<std::vector<double>> bursts(m);
  std::vector<double> burst_gain(m, 0.0);
  for (std::size_t s = 0; s < m; ++s) {
    const bool burst = events[s] != 0;
    const bool distractor = !burst && rng.bernoulli(cfg.audio_distractor_rate);
    if (!burst && !distractor) continue;
    if (burst) {
      // Broadband crackle plus a high tone, amplitude-modulated.
      const double tone = rng.uniform(1000.0, 2500.0);
      const double am = rng.uniform(6.0, 14.0);
      double prev = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = rng.normal();
        const double hp = w - prev;  // first difference tilts energy upward
        prev = w;
        const double t = static_cast<double>(i) / fs;
        const double env = 0.55 + 0.45 * std::sin(kTwoPi * am * t);
        seg[i] = env * (0.7 * hp + std::sin(kTwoPi * tone * t));
      }
      set_rms(seg, 1.0);
      burst_gain[s] = rng.uniform(cfg.burst_min, cfg.burst_max);
      bursts[s] = seg;
      continue;
    } else {
      // Harmless loud sound (door, engine, shout) overlapping the burst band.
      const double tone = rng.uniform(cfg.distractor_tone_min, 2200.0);
      const double noise = rng.uniform(0.2, 0.8);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double hann = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n - 1));
        seg[i] = hann * std::sin(kTwoPi * tone * t) + noise * rng.normal();
      }
      set_rms(seg, rng.uniform(cfg.audio_distractor_min, cfg.audio_distractor_max) * bg_rms);
    }
    for (std::size_t i = 0; i < n; ++i) bg[s * n + i] += seg[i];
  }

  std::vector<double> levels;
  for (std::size_t s = 0; s < m; ++s) {
    if (anomalous[s]) continue;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += bg[s * n + i] * bg[s * n + i];
    levels.push_back(events[s] ? std::numeric_limits<double>::infinity() : std::sqrt(sq / static_cast<double>(n)));
  }
  double ref = bg_rms;
  if (!levels.empty()) {
    std::sort(levels.begin(), levels.end());
    const std::size_t k = levels.size();
    const double med = k % 2 ? levels[k / 2] : 0.5 * (levels[k / 2 - 1] + levels[k / 2]);
    if (std::isfinite(med)) ref = std::max(ref, med);
  }
  for (std::size_t s = 0; s < m; ++s) {
    if (!events[s]) continue;
    for (std::size_t i = 0; i < n; ++i) bg[s * n + i] += burst_gain[s] * ref * bursts[s][i];
  }

  out.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    out[i] = static_cast<float>(std::clamp(bg[i], -1.0, 1.0));
  }
}

void synth_frames(const GenConfig& cfg, Rng& rng, const std::vector<std::uint8_t>& events,
                  std::vector<float>& out) {
  const std::size_t m = cfg.segments;
  const std::size_t F = cfg.frames_per_segment;
  const std::size_t H = cfg.height;
  const std::size_t W = cfg.width;
  out.assign(m * F * H * W, 0.0f);

  struct Wave {
    double amp, fx, fy, phase, speed;
  };
  std::vector<Wave> waves(3);
  for (auto& w : waves) {
    w.amp = rng.uniform(0.03, 0.09);
    w.fx = static_cast<double>(rng.below(4));
    w.fy = static_cast<double>(rng.below(4));
    w.phase = rng.uniform(0.0, kTwoPi);
    w.speed = rng.uniform(-0.06, 0.06);
  }
  double base = rng.uniform(0.3, 0.7);
  const double sensor_noise = rng.uniform(cfg.sensor_noise_min, cfg.sensor_noise_max);

  // Flash patch placement is per event run; consecutive anomalous segments
  // share one patch that drifts a pixel per frame.
  std::size_t patch = 0, px = 0, py = 0;
  int vx = 0, vy = 0;
  bool in_event = false;

  for (std::size_t s = 0; s < m; ++s) {
    const bool flash = events[s] != 0;
    if (flash && !in_event) {
      patch = 8 + rng.below(5);
      px = rng.below(W - patch);
      py = rng.below(H - patch);
      vx = static_cast<int>(rng.below(3)) - 1;
      vy = static_cast<int>(rng.below(3)) - 1;
    }
    in_event = flash;
    const bool blob = !flash && rng.bernoulli(cfg.visual_distractor_rate);
    double bx = 0, by = 0, bdx = 0, bdy = 0, bsig = 0, bamp = 0;
    if (blob) {
      bx = rng.uniform(0.0, static_cast<double>(W));
      by = rng.uniform(0.0, static_cast<double>(H));
      bdx = rng.uniform(-1.5, 1.5);
      bdy = rng.uniform(-1.5, 1.5);
      bsig = rng.uniform(2.5, 5.0);
      bamp = cfg.visual_distractor_intensity * rng.uniform(0.6, 1.0);
    }
    for (std::size_t f = 0; f < F; ++f) {
      const double t = static_cast<double>(s * F + f);
      base = reflect01(base + 0.006 * rng.normal());
      float* frame = out.data() + (s * F + f) * H * W;
      for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
          double v = base;
          for (const auto& w : waves) {
            v += w.amp * std::cos(kTwoPi * (w.fx * static_cast<double>(x) / static_cast<double>(W) +
                                            w.fy * static_cast<double>(y) / static_cast<double>(H)) +
                                  w.phase + w.speed * t);
          }
          v += sensor_noise * rng.normal();
          frame[y * W + x] = static_cast<float>(reflect01(v));
        }
      }
      if (blob) {
        const double cx = bx + bdx * static_cast<double>(f), cy = by + bdy * static_cast<double>(f);
        for (std::size_t y = 0; y < H; ++y) {
          for (std::size_t x = 0; x < W; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            const double v = frame[y * W + x] + bamp * std::exp(-(dx * dx + dy * dy) / (2.0 * bsig * bsig));
            frame[y * W + x] = static_cast<float>(std::min(1.0, v));
          }
        }
      }
      if (flash) {
        const double strength = cfg.flash_intensity * ((f % 2 == 0) ? 1.0 : 0.35);
        const auto ox = static_cast<std::size_t>(std::clamp<long>(
            static_cast<long>(px) + vx * static_cast<long>(f), 0, static_cast<long>(W - patch)));
        const auto oy = static_cast<std::size_t>(std::clamp<long>(
            static_cast<long>(py) + vy * static_cast<long>(f), 0, static_cast<long>(H - patch)));
        for (std::size_t y = oy; y < oy + patch; ++y) {
          for (std::size_t x = ox; x < ox + patch; ++x) {
            const double texture = ((x + y + f) % 2 == 0) ? 1.0 : 0.6;
            const double v = frame[y * W + x] + strength * texture;
            frame[y * W + x] = static_cast<float>(std::min(1.0, v));
          }
        }
      }
    }
    if (flash) {
      px = std::min(W - patch, px + static_cast<std::size_t>(std::max(0, vx)) * F);
      py = std::min(H - patch, py + static_cast<std::size_t>(std::max(0, vy)) * F);
    }
  }
}

}  // namespace

double rms(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double ss = 0.0;
  for (float v : x) ss += static_cast<double>(v) * v;
  return std::sqrt(ss / static_cast<double>(x.size()));
}

std::string GenConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "train=" << train_count << ";test=" << test_count << ";m=" << segments
     << ";sps=" << samples_per_segment << ";sr=" << sample_rate << ";F=" << frames_per_segment
     << ";H=" << height << ";W=" << width << ";ratio=" << anomaly_ratio
     << ";burst=" << burst_min << "," << burst_max << ";flash=" << flash_intensity
     << ";dur=" << event_duration << ";distract=" << audio_distractor_rate << "," << audio_distractor_min << ","
     << audio_distractor_max << "," << distractor_tone_min  << ";noise=" << sensor_noise_min << "," << sensor_noise_max << ";vdistract=" << visual_distractor_rate << "," << visual_distractor_intensity
     << ";confuse=" << joint_confuser_rate << ","
     << audio_confuser_rate << "," << visual_confuser_rate << ";mode=" << static_cast<int>(event_mode) << ";seed=" << seed;
  return os.str();
}

void validate_config(const GenConfig& cfg) {
  auto fail = [](const std::string& what) { throw ValidationError(kModule, "invalid config: " + what); };
  if (cfg.train_count + cfg.test_count == 0) fail("video count must be positive");
  if (cfg.segments < 2) fail("segments must be >= 2");
  if (cfg.samples_per_segment < 16) fail("samples_per_segment must be >= 16");
  if (cfg.sample_rate == 0) fail("sample_rate must be positive");
  if (cfg.frames_per_segment < 1) fail("frames_per_segment must be positive");
  if (cfg.height < 16 || cfg.width < 16) fail("frame size must be at least 16x16");
  if (!(cfg.anomaly_ratio > 0.0 && cfg.anomaly_ratio < 1.0)) fail("anomaly_ratio must be in (0,1)");
  if (cfg.event_duration < 1) fail("event_duration must be >= 1");
  if (cfg.event_duration > cfg.segments / 2) fail("event_duration must be <= segments/2");
  if (!(cfg.burst_min >= 3.0 && cfg.burst_max >= cfg.burst_min)) fail("burst amplitude must satisfy 3 <= min <= max");
  if (!(cfg.flash_intensity > 0.0 && cfg.flash_intensity <= 1.0)) fail("flash_intensity must be in (0,1]");
  if (!(cfg.audio_distractor_rate >= 0.0 && cfg.audio_distractor_rate < 1.0)) fail("audio_distractor_rate must be in [0,1)");
  if (!(cfg.audio_distractor_min > 0.0 && cfg.audio_distractor_max >= cfg.audio_distractor_min)) {
    fail("audio distractor range must satisfy 0 < min <= max");
  }
  if (!(cfg.sensor_noise_min >= 0.0 && cfg.sensor_noise_max >= cfg.sensor_noise_min && cfg.sensor_noise_max <= 0.5)) {
    fail("sensor noise range must satisfy 0 <= min <= max <= 0.5");
  }
  for (double r : {cfg.joint_confuser_rate, cfg.audio_confuser_rate, cfg.visual_confuser_rate}) {
    if (!(r >= 0.0 && r < 1.0)) fail("confuser rates must be in [0,1)");
  }
  if (!(cfg.visual_distractor_rate >= 0.0 && cfg.visual_distractor_rate < 1.0)) fail("visual_distractor_rate must be in [0,1)");
  if (!(cfg.visual_distractor_intensity >= 0.0 && cfg.visual_distractor_intensity <= 1.0)) {
    fail("visual_distractor_intensity must be in [0,1]");
  }
}

std::uint8_t scene_label(const GenConfig& cfg, std::size_t index) {
  const bool train = index < cfg.train_count;
  const std::size_t offset = train ? 0 : cfg.train_count;
  const std::size_t count = train ? cfg.train_count : cfg.test_count;
  if (index >= cfg.video_count()) throw ContractError(kModule, "scene index out of range");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, train ? "labels/train" : "labels/test"));
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t positives = positives_in_split(cfg, train);
  const auto it = std::find(order.begin(), order.end(), index - offset);
  return static_cast<std::size_t>(it - order.begin()) < positives ? 1 : 0;
}

RawScene generate_scene(const GenConfig& cfg, std::size_t index) {
  validate_config(cfg);
  const bool train = index < cfg.train_count;
  RawScene scene;
  char id[32];
  std::snprintf(id, sizeof(id), "%s_%05zu", train ? "train" : "test",
                train ? index : index - cfg.train_count);
  scene.id = id;
  scene.sample_rate = cfg.sample_rate;
  scene.segments = cfg.segments;
  scene.samples_per_segment = cfg.samples_per_segment;
  scene.frames_per_segment = cfg.frames_per_segment;
  scene.height = cfg.height;
  scene.width = cfg.width;
  scene.label = scene_label(cfg, index);

  Rng rng(derive_seed(cfg.seed, "scene", index));
  std::vector<std::uint8_t> anomalous(cfg.segments, 0);
  if (scene.label == 1) {
    for (auto s : pick_event_segments(cfg, rng)) anomalous[s] = 1;
  }
  const bool audio_events = cfg.event_mode != EventMode::VisualOnly;
  const bool visual_events = cfg.event_mode != EventMode::AudioOnly;
  std::vector<std::uint8_t> audio_marks(cfg.segments, 0), visual_marks(cfg.segments, 0);
  for (std::size_t s = 0; s < cfg.segments; ++s) {
    // Draw all three every segment so each rate only changes its own events.
    const bool joint = rng.bernoulli(cfg.joint_confuser_rate);
    const bool audio_only = rng.bernoulli(cfg.audio_confuser_rate);
    const bool visual_only = rng.bernoulli(cfg.visual_confuser_rate);
    if (train) {
      audio_marks[s] = anomalous[s] && audio_events;
      visual_marks[s] = anomalous[s] && visual_events;
    } else if (anomalous[s]) {
      audio_marks[s] = audio_events;
      visual_marks[s] = visual_events;
    } else {
      audio_marks[s] = joint || audio_only;
      visual_marks[s] = joint || visual_only;
    }
  }
  Rng audio_rng(derive_seed(cfg.seed, "scene/audio", index));
  Rng visual_rng(derive_seed(cfg.seed, "scene/visual", index));
  synth_audio(cfg, audio_rng, audio_marks, anomalous, scene.audio);
  synth_frames(cfg, visual_rng, visual_marks, scene.frames);
  if (!train) scene.segment_truth = anomalous;
  return scene;
}

SceneSplit generate_dataset(const GenConfig& cfg, Exec exec) {
  validate_config(cfg);
  std::vector<RawScene> all(cfg.video_count());
  parallel_for(all.size(), [&](std::size_t i) { all[i] = generate_scene(cfg, i); }, exec);
  SceneSplit split;
  split.train.assign(std::make_move_iterator(all.begin()),
                     std::make_move_iterator(all.begin() + static_cast<long>(cfg.train_count)));
  split.test.assign(std::make_move_iterator(all.begin() + static_cast<long>(cfg.train_count)),
                    std::make_move_iterator(all.end()));
  return split;
}

void validate_scene(const RawScene& s) {
  auto fail = [&](const std::string& what) {
    throw ValidationError(kModule, "scene '" + s.id + "': " + what);
  };
  if (s.segments == 0 || s.samples_per_segment == 0) fail("empty audio layout");
  if (s.frames_per_segment == 0 || s.height == 0 || s.width == 0) fail("empty frame layout");
  if (s.audio.size() != s.segments * s.samples_per_segment) fail("audio length != m x samples_per_segment");
  if (s.frames.size() != s.segments * s.segment_pixels()) fail("frame count != m");
  if (!s.segment_truth.empty() && s.segment_truth.size() != s.segments) fail("segment_truth length != m");
  if (s.label > 1) fail("label must be 0 or 1");
  for (auto t : s.segment_truth) {
    if (t > 1) fail("segment_truth flag must be 0 or 1");
    if (t == 1 && s.label == 0) fail("segment_truth flag on a normal scene");
  }
  for (float v : s.audio) {
    if (!std::isfinite(v) || v < -1.0f || v > 1.0f) fail("audio sample outside [-1,1]");
  }
  for (float v : s.frames) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) fail("pixel outside [0,1]");
  }
}

}  // namespace robusta
