#include "robusta/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "robusta/error.hpp"

namespace robusta {

namespace {

constexpr const char* kModule = "fusion";

void check_calibration(const SigmoidCalibration& cal) {
  if (!(cal.scale > 0.0) || !std::isfinite(cal.scale) || !std::isfinite(cal.shift)) {
    throw ContractError(kModule, "calibration needs finite shift and finite positive scale");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double dynamic_weight(double nll_value, const SigmoidCalibration& cal) {
  check_calibration(cal);
  constexpr double kUpper = 0.5 - std::numeric_limits<double>::epsilon() / 4;  // largest double below 0.5
  constexpr double kLower = std::numeric_limits<double>::denorm_min();
  const double u = cal.scale * (nll_value + cal.shift);
  if (std::isnan(u)) throw ContractError(kModule, "NaN NLL");
  double w;
  if (u > 0.0) {
    // 0.5 e^-u / (1 + e^-u) avoids overflow for large u.
    const double e = std::exp(-u);
    w = 0.5 * e / (1.0 + e);
  } else {
    w = 0.5 / (1.0 + std::exp(u));
  }
  return std::clamp(w, kLower, kUpper);
}

ModalityWeights normalize_weights(double raw_audio, double raw_visual, bool audio_present, bool visual_present) {
  if (!audio_present && !visual_present) throw ContractError(kModule, "both modalities absent");
  if (!audio_present) return {0.0, 1.0};
  if (!visual_present) return {1.0, 0.0};
  if (!(raw_audio >= 0.0 && raw_audio <= 0.5) || !(raw_visual >= 0.0 && raw_visual <= 0.5)) {
    throw ContractError(kModule, "raw weights must lie in [0, 0.5]");
  }
  if (raw_audio < 1e-12 && raw_visual < 1e-12) return {0.5, 0.5};
  const double total = raw_audio + raw_visual;
  const double a = raw_audio / total;
  return {a, 1.0 - a};
}

std::vector<double> fuse(std::optional<std::span<const double>> audio, std::optional<std::span<const double>> visual,
                         std::span<const ModalityWeights> weights) {
  if (!audio && !visual) throw ContractError(kModule, "nothing to fuse");
  const std::size_t m = audio ? audio->size() : visual->size();
  if (audio && visual && audio->size() != visual->size()) {
    throw ContractError(kModule, "score length mismatch: audio " + std::to_string(audio->size()) + ", visual " +
                                     std::to_string(visual->size()));
  }
  if (weights.size() != m && weights.size() != 1) throw ContractError(kModule, "weight count does not match segments");
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& w = weights.size() == 1 ? weights[0] : weights[i];
    if (std::abs(w.audio + w.visual - 1.0) > 1e-9 || w.audio < 0.0 || w.visual < 0.0) {
      throw ContractError(kModule, "weights are not normalized");
    }
    double s;
    if (!audio) {
      s = w.visual * (*visual)[i];
    } else if (!visual) {
      s = w.audio * (*audio)[i];
    } else {
      s = w.audio * (*audio)[i] + w.visual * (*visual)[i];
    }
    out[i] = std::clamp(s, 0.0, 1.0);
  }
  return out;
}

std::vector<double> fuse(std::optional<std::span<const double>> audio, std::optional<std::span<const double>> visual,
                         const ModalityWeights& weights) {
  return fuse(audio, visual, std::span<const ModalityWeights>(&weights, 1));
}

std::string_view to_string(FusionScheme s) {
  switch (s) {
    case FusionScheme::NaiveAverage: return "naive";
    case FusionScheme::Dynamic: return "dynamic";
    case FusionScheme::ConcatBaseline: return "concat";
  }
  return "?";
}

FusionScheme parse_fusion_scheme(std::string_view name) {
  if (name == "naive") return FusionScheme::NaiveAverage;
  if (name == "dynamic") return FusionScheme::Dynamic;
  if (name == "concat") return FusionScheme::ConcatBaseline;
  throw ContractError(kModule, "unknown scheme '" + std::string(name) + "' (expected naive|dynamic|concat)");
}

bool scheme_accepts(FusionScheme scheme, ModelVariant variant) {
  return (scheme == FusionScheme::ConcatBaseline) == (variant == ModelVariant::Concat);
}

VideoEvidence gather_evidence(const VideoBag& bag, const ScoringModels& models, FusionScheme scheme) {
  if (!models.model) throw ContractError(kModule, "no detector loaded");
  if (!scheme_accepts(scheme, models.model->variant)) {
    throw ContractError(kModule, std::string(to_string(scheme)) + " scheme cannot use a " +
                                     std::string(to_string(models.model->variant)) + "-trained detector");
  }
  validate_bag(bag);
  VideoEvidence ev;
  ev.segments = bag.segment_count();
  const auto& model = *models.model;
  if (scheme == FusionScheme::ConcatBaseline) {
    ev.concat_scores = model.score_concat(bag.audio ? &*bag.audio : nullptr, bag.visual ? &*bag.visual : nullptr);
    return ev;
  }
  if (bag.audio) ev.audio_scores = model.score_audio(*bag.audio);
  if (bag.visual) ev.visual_scores = model.score_visual(*bag.visual);
  if (scheme == FusionScheme::Dynamic) {
    if (!models.audio || !models.visual) throw ContractError(kModule, "dynamic scheme needs both GMMs");
    if (bag.audio) ev.audio_nll = nll_rows(*bag.audio, models.audio->gmm);
    if (bag.visual) ev.visual_nll = nll_rows(*bag.visual, models.visual->gmm);
  }
  return ev;
}

ScoreTrace fuse_evidence(const VideoEvidence& ev, const ScoringModels& models, FusionScheme scheme) {
  ScoreTrace t;
  if (scheme == FusionScheme::ConcatBaseline) {
    if (!ev.concat_scores) throw ContractError(kModule, "missing concat scores");
    t.fused = *ev.concat_scores;
    return t;
  }
  const bool has_a = ev.audio_scores.has_value();
  const bool has_v = ev.visual_scores.has_value();
  if (has_a) t.audio = *ev.audio_scores;
  if (has_v) t.visual = *ev.visual_scores;
  t.weights.resize(ev.segments);
  for (std::size_t i = 0; i < ev.segments; ++i) {
    double ra = 0.25, rv = 0.25;
    if (scheme == FusionScheme::Dynamic) {
      if (has_a) ra = dynamic_weight((*ev.audio_nll)[i], models.audio->calibration);
      if (has_v) rv = dynamic_weight((*ev.visual_nll)[i], models.visual->calibration);
    }
    t.weights[i] = normalize_weights(ra, rv, has_a, has_v);
  }
  std::optional<std::span<const double>> a, v;
  if (has_a) a = std::span<const double>(t.audio);
  if (has_v) v = std::span<const double>(t.visual);
  t.fused = fuse(a, v, std::span<const ModalityWeights>(t.weights));
  return t;
}

ScoreTrace score_video_trace(const VideoBag& bag, const ScoringModels& models, FusionScheme scheme) {
  return fuse_evidence(gather_evidence(bag, models, scheme), models, scheme);
}

std::vector<double> score_video(const VideoBag& bag, const ScoringModels& models, FusionScheme scheme) {
  return score_video_trace(bag, models, scheme).fused;
}

std::string trace_csv(const ScoreTrace& t) {
  std::string out = "segment_index,audio_score,visual_score,lambda_a,lambda_v,fused\n";
  for (std::size_t i = 0; i < t.fused.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    if (!t.audio.empty()) out += fmt(t.audio[i]);
    out += ',';
    if (!t.visual.empty()) out += fmt(t.visual[i]);
    out += ',';
    if (!t.weights.empty()) out += fmt(t.weights[i].audio);
    out += ',';
    if (!t.weights.empty()) out += fmt(t.weights[i].visual);
    out += ',';
    out += fmt(t.fused[i]);
    out += '\n';
  }
  return out;
}

}  // namespace robusta
