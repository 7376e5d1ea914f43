#include "robusta/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

#include "robusta/error.hpp"

namespace robusta {

namespace {

constexpr const char* kModule = "evalbench";

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string level_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Scores and truth of every segment, in bag order.
double segment_ap(std::span<const ScoreTrace> traces, std::span<const VideoBag* const> bags, std::size_t* n_out) {
  std::vector<double> scores;
  std::vector<std::uint8_t> truth;
  for (std::size_t v = 0; v < bags.size(); ++v) {
    const auto& t = bags[v]->segment_truth;
    if (!t) throw ContractError(kModule, "bag '" + bags[v]->id + "' has no segment_truth");
    scores.insert(scores.end(), traces[v].fused.begin(), traces[v].fused.end());
    truth.insert(truth.end(), t->begin(), t->end());
  }
  if (n_out) *n_out = scores.size();
  return average_precision(scores, truth);
}

}  // namespace

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> truth) {
  if (scores.size() != truth.size()) {
    throw ContractError(kModule, "scores (" + std::to_string(scores.size()) + ") and truth (" +
                                     std::to_string(truth.size()) + ") differ in length");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw ContractError(kModule, "NaN score");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (truth[order[r]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) throw ContractError(kModule, "AP needs at least one positive");
  return sum / static_cast<double>(hits);
}

double evaluate(std::span<const VideoBag> bags, const ScoringModels& models, FusionScheme scheme, Exec exec) {
  std::vector<ScoreTrace> traces(bags.size());
  parallel_for(bags.size(), [&](std::size_t i) { traces[i] = score_video_trace(bags[i], models, scheme); }, exec);
  std::vector<const VideoBag*> ptrs;
  for (const auto& b : bags) ptrs.push_back(&b);
  return segment_ap(traces, ptrs, nullptr);
}

std::string SweepCondition::name() const {
  switch (type) {
    case Type::Single: return std::string(to_string(kinds.at(0)));
    case Type::Mixed: return "mixed_" + std::string(to_string(modality));
    case Type::Missing: return "missing_" + std::string(to_string(modality));
    case Type::Dual: return std::string(to_string(kinds.at(0))) + "+" + std::string(to_string(kinds.at(1)));
  }
  return "?";
}

std::string SweepCondition::modality_label() const {
  switch (type) {
    case Type::Single: return std::string(to_string(modality_of(kinds.at(0))));
    case Type::Mixed:
    case Type::Missing: return std::string(to_string(modality));
    case Type::Dual: return "audio+visual";
  }
  return "?";
}

SweepCondition parse_sweep_condition(std::string_view text) {
  SweepCondition c;
  auto modality_suffix = [&](std::string_view rest) {
    if (rest == "audio") return Modality::Audio;
    if (rest == "visual") return Modality::Visual;
    throw ContractError(kModule, "unknown sweep condition '" + std::string(text) + "'");
  };
  for (std::string_view prefix : {"mixed_", "mixed-", "missing_", "missing-"}) {
    if (text.starts_with(prefix)) {
      c.type = prefix.starts_with("mixed") ? SweepCondition::Type::Mixed : SweepCondition::Type::Missing;
      c.modality = modality_suffix(text.substr(prefix.size()));
      if (c.type == SweepCondition::Type::Mixed) {
        if (c.modality == Modality::Audio) c.kinds.assign(kAudioKinds.begin(), kAudioKinds.end());
        else c.kinds.assign(kVisualKinds.begin(), kVisualKinds.end());
      }
      return c;
    }
  }
  if (const auto plus = text.find('+'); plus != std::string_view::npos) {
    const auto a = parse_corruption_kind(text.substr(0, plus));
    const auto b = parse_corruption_kind(text.substr(plus + 1));
    if (!a || !b || modality_of(*a) == modality_of(*b)) {
      throw ContractError(kModule, "dual condition '" + std::string(text) + "' needs one visual and one audio kind");
    }
    c.type = SweepCondition::Type::Dual;
    c.kinds = modality_of(*a) == Modality::Visual ? std::vector{*a, *b} : std::vector{*b, *a};
    return c;
  }
  const auto k = parse_corruption_kind(text);
  if (!k) throw ContractError(kModule, "unknown sweep condition '" + std::string(text) + "'");
  c.kinds = {*k};
  c.modality = modality_of(*k);
  return c;
}

std::vector<SweepCondition> single_kind_conditions() {
  std::vector<SweepCondition> out;
  auto add = [&](CorruptionKind k) {
    SweepCondition c;
    c.kinds = {k};
    c.modality = modality_of(k);
    out.push_back(c);
  };
  for (auto k : kVisualKinds) add(k);
  for (auto k : kAudioKinds) add(k);
  return out;
}

void validate_config(const SweepConfig& cfg) {
  if (cfg.conditions.empty()) throw ContractError(kModule, "sweep needs at least one corruption kind");
  if (cfg.levels.empty()) throw ContractError(kModule, "sweep needs at least one level");
  for (double l : cfg.levels) {
    if (!is_allowed_fraction(l)) throw ContractError(kModule, "level " + level_text(l) + " is not an allowed fraction");
  }
  if (cfg.severity < kMinSeverity || cfg.severity > kMaxSeverity) throw ContractError(kModule, "severity must be 1..5");
  if (cfg.schemes.empty() || cfg.variants.empty()) throw ContractError(kModule, "sweep needs schemes and variants");
  bool any = false;
  for (auto s : cfg.schemes) {
    for (auto v : cfg.variants) any = any || scheme_accepts(s, v);
  }
  if (!any) throw ContractError(kModule, "no scheme is compatible with any listed variant");
}

std::string SweepReport::to_csv() const {
  std::string out = "kind,modality,level,scheme,variant,ap,n_segments\n";
  for (const auto& r : rows) {
    out += r.kind + ',' + r.modality + ',' + level_text(r.level) + ',' + std::string(to_string(r.scheme)) + ',' +
           std::string(to_string(r.variant)) + ',' + fixed(r.ap, 8) + ',' + std::to_string(r.n_segments) + '\n';
  }
  return out;
}

const SweepRow& SweepReport::find(std::string_view kind, double level, FusionScheme scheme,
                                  ModelVariant variant) const {
  for (const auto& r : rows) {
    if (r.kind == kind && r.level == level && r.scheme == scheme && r.variant == variant) return r;
  }
  throw ContractError(kModule, "no sweep row for " + std::string(kind) + " at " + level_text(level));
}

SweepReport run_sweep(const SweepConfig& cfg, std::span<const RawScene> clean_test, const SweepModels& sm,
                      const ExtractorConfig& extractor, Exec exec) {
  validate_config(cfg);
  if (clean_test.empty()) throw ContractError(kModule, "no test scenes");

  struct Pair {
    FusionScheme scheme;
    ModelVariant variant;
    std::size_t model;  // index into the evidence cache
  };
  std::vector<const AnomalyModel*> variant_models;
  std::vector<Pair> pairs;
  for (auto v : cfg.variants) {
    const AnomalyModel* found = nullptr;
    for (const auto* m : sm.models) {
      if (m && m->variant == v) found = m;
    }
    if (!found) throw ContractError(kModule, "no model of variant '" + std::string(to_string(v)) + "'");
    variant_models.push_back(found);
  }
  for (auto s : cfg.schemes) {
    for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
      if (scheme_accepts(s, cfg.variants[vi])) pairs.push_back({s, cfg.variants[vi], vi});
    }
  }
  bool needs_gmm = false;
  for (auto s : cfg.schemes) needs_gmm = needs_gmm || s == FusionScheme::Dynamic;
  if (needs_gmm && (!sm.audio || !sm.visual)) throw ContractError(kModule, "dynamic scheme needs both GMMs");

  const std::size_t n = clean_test.size();
  std::vector<std::string> ids;
  for (const auto& s : clean_test) ids.push_back(s.id);
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < n; ++i) {
    if (!index_of.emplace(ids[i], i).second) throw ContractError(kModule, "duplicate video id '" + ids[i] + "'");
  }
  // Rank of each video in the selection order: a video is corrupted at a
  // level exactly when its rank falls inside that level's prefix.
  std::vector<std::size_t> rank(n);
  {
    const auto all = select_corrupted_subset(ids, 1.0, cfg.seed);
    for (std::size_t r = 0; r < all.size(); ++r) rank[index_of.at(all[r])] = r;
  }

  // Evidence per (variant, video); shared variants carry GMM NLLs too.
  auto gather = [&](const std::vector<VideoBag>& bags) {
    std::vector<std::vector<VideoEvidence>> ev(variant_models.size(), std::vector<VideoEvidence>(bags.size()));
    parallel_for(variant_models.size() * bags.size(), [&](std::size_t t) {
      const std::size_t v = t / bags.size(), i = t % bags.size();
      const auto* model = variant_models[v];
      const ScoringModels scoring{model, sm.audio, sm.visual};
      const auto scheme = model->variant == ModelVariant::Concat
                              ? FusionScheme::ConcatBaseline
                              : (needs_gmm ? FusionScheme::Dynamic : FusionScheme::NaiveAverage);
      ev[v][i] = gather_evidence(bags[i], scoring, scheme);
    }, exec);
    return ev;
  };

  const auto clean_bags = extract_all(clean_test, extractor, exec);
  const auto clean_ev = gather(clean_bags);

  SweepReport report;
  for (const auto& cond : cfg.conditions) {
    if (cond.type != SweepCondition::Type::Missing && cond.kinds.empty()) {
      throw ContractError(kModule, "condition without corruption kinds");
    }
    std::vector<VideoBag> bad(n);
    parallel_for(n, [&](std::size_t i) {
      if (cond.type == SweepCondition::Type::Missing) {
        bad[i] = clean_bags[i];
        if (cond.modality == Modality::Audio) bad[i].audio.reset();
        else bad[i].visual.reset();
        return;
      }
      RawScene scene = clean_test[i];
      if (cond.type == SweepCondition::Type::Mixed) {
        const auto kind = cond.kinds[rank[i] % cond.kinds.size()];
        scene = corrupt_scene(scene, kind, cfg.severity, corruption_seed(cfg.seed, kind, scene.id));
      } else {
        for (auto kind : cond.kinds) {
          scene = corrupt_scene(scene, kind, cfg.severity, corruption_seed(cfg.seed, kind, scene.id));
        }
      }
      bad[i] = extract_bag(scene, extractor);
    }, exec);
    const auto bad_ev = gather(bad);

    for (double level : cfg.levels) {
      const auto count = select_corrupted_subset(ids, level, cfg.seed).size();
      std::vector<const VideoBag*> bags(n);
      for (std::size_t i = 0; i < n; ++i) bags[i] = rank[i] < count ? &bad[i] : &clean_bags[i];
      for (const auto& p : pairs) {
        const ScoringModels scoring{variant_models[p.model], sm.audio, sm.visual};
        std::vector<ScoreTrace> traces(n);
        for (std::size_t i = 0; i < n; ++i) {
          const auto& ev = rank[i] < count ? bad_ev[p.model][i] : clean_ev[p.model][i];
          traces[i] = fuse_evidence(ev, scoring, p.scheme);
        }
        SweepRow row;
        row.kind = cond.name();
        row.modality = cond.modality_label();
        row.level = level;
        row.scheme = p.scheme;
        row.variant = p.variant;
        row.ap = segment_ap(traces, bags, &row.n_segments);
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

}  // namespace robusta
