#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "robusta/binary_io.hpp"
#include "robusta/corruptions.hpp"
#include "robusta/detector.hpp"
#include "robusta/error.hpp"
#include "robusta/evalbench.hpp"
#include "robusta/extractors.hpp"
#include "robusta/feature_io.hpp"
#include "robusta/fusion.hpp"
#include "robusta/gmm.hpp"
#include "robusta/model_io.hpp"
#include "robusta/parallel.hpp"
#include "robusta/scene_io.hpp"
#include "robusta/synthgen.hpp"

namespace robusta::cli {
namespace {

constexpr const char* kModule = "cli";
namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& message) { throw Error(kModule, message); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    auto item = trim(text.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Modality parse_modality(const std::string& name) {
  if (name == "audio") return Modality::Audio;
  if (name == "visual") return Modality::Visual;
  fail("unknown modality '" + name + "' (expected audio or visual)");
}

EventMode parse_event_mode(const std::string& name) {
  if (name == "correlated") return EventMode::Correlated;
  if (name == "audio-only") return EventMode::AudioOnly;
  if (name == "visual-only") return EventMode::VisualOnly;
  fail("unknown event mode '" + name + "'");
}

CorruptionKind parse_kind(const std::string& name) {
  auto k = parse_corruption_kind(name);
  if (!k) fail("unknown corruption kind '" + name + "'");
  return *k;
}

// RAF1 carries no header fields for provenance, so extract writes it next to
// the feature file.
void write_feature_meta(const fs::path& features, const Provenance& prov) {
  std::ofstream meta(features.string() + ".meta");
  if (!meta) throw IoError(kModule, "cannot write " + features.string() + ".meta");
  meta << "seed = " << prov.seed << "\nconfig_hash = " << hex64(prov.config_hash) << "\n";
}

std::uint64_t feature_seed(const fs::path& features) {
  std::ifstream meta(features.string() + ".meta");
  if (!meta) return 0;
  std::stringstream ss;
  ss << meta.rdbuf();
  const auto kv = parse_config_text(ss.str());
  const auto it = kv.find("seed");
  return it == kv.end() ? 0 : std::stoull(it->second);
}

CalibratedGmm load_calibrated(const std::string& path) {
  auto art = read_gmm(path);
  if (!art.calibration) fail("GMM '" + path + "' has no calibration; run calibrate first");
  return {std::move(art.gmm), *art.calibration};
}

// Options for one subcommand plus the action to run after parsing.
struct Command {
  CLI::App* app = nullptr;
  std::uint64_t seed = 0;
  std::string config;
  std::function<void(std::ostream&)> run;

  bool seed_given() const { return app->get_option("--seed")->count() > 0; }
};

void add_common(Command& c) {
  c.app->add_option("--seed", c.seed, "Base seed for every random draw");
  c.app->add_option("--config", c.config, "File of `key = value` lines (flags win)");
}

void register_gen(CLI::App& app, Command& c) {
  struct Opts {
    std::optional<std::size_t> n, train, test;
    std::size_t segments = 16;
    double anomaly_ratio = 0.5;
    std::string event_mode = "correlated";
    std::string out_train = "train.ras", out_test = "test.ras";
  };
  auto o = std::make_shared<Opts>();
  c.app = app.add_subcommand("gen", "Generate synthetic train/test scenes (RAS1)");
  add_common(c);
  c.app->add_option("--n", o->n, "Total video count, split 4:1 into train/test");
  c.app->add_option("--train", o->train, "Training videos (overrides --n)");
  c.app->add_option("--test", o->test, "Test videos (overrides --n)");
  c.app->add_option("--segments", o->segments, "Segments per video");
  c.app->add_option("--anomaly-ratio", o->anomaly_ratio, "Fraction of anomalous videos");
  c.app->add_option("--event-mode", o->event_mode, "correlated | audio-only | visual-only");
  c.app->add_option("--out-train", o->out_train, "Training scenes output");
  c.app->add_option("--out-test", o->out_test, "Test scenes output");
  c.run = [o, &c](std::ostream& out) {
    GenConfig gc;
    if (o->n) {
      gc.train_count = *o->n * 4 / 5;
      gc.test_count = *o->n - gc.train_count;
    }
    if (o->train) gc.train_count = *o->train;
    if (o->test) gc.test_count = *o->test;
    gc.segments = o->segments;
    gc.anomaly_ratio = o->anomaly_ratio;
    gc.event_mode = parse_event_mode(o->event_mode);
    gc.seed = c.seed;
    auto split = generate_dataset(gc);
    const Provenance prov{c.seed, fnv1a64(gc.canonical())};
    write_scenes(split.train, prov, o->out_train);
    write_scenes(split.test, prov, o->out_test);
    out << "wrote " << split.train.size() << " train scenes to " << o->out_train << " and "
        << split.test.size() << " test scenes to " << o->out_test << "\n";
  };
}

void register_corrupt(CLI::App& app, Command& c) {
  struct Opts {
    std::string in, out, kind, manifest;
    int severity = kDefaultSeverity;
    double fraction = 1.0;
  };
  auto o = std::make_shared<Opts>();
  c.app = app.add_subcommand("corrupt", "Corrupt a fraction of scenes in one modality");
  add_common(c);
  c.app->add_option("--in", o->in, "Input scenes (RAS1)")->required()->check(CLI::ExistingFile);
  c.app->add_option("--out", o->out, "Output scenes (RAS1)")->required();
  c.app->add_option("--kind", o->kind, "Corruption kind, e.g. fog or babble")->required();
  c.app->add_option("--severity", o->severity, "Severity 1..5");
  c.app->add_option("--fraction", o->fraction, "Fraction of videos to corrupt");
  c.app->add_option("--manifest", o->manifest, "Corrupted ids, one per line (default <out>.manifest)");
  c.run = [o, &c](std::ostream& out) {
    Provenance in_prov;
    auto scenes = read_scenes(o->in, &in_prov);
    CorruptionSpec spec{parse_kind(o->kind), o->severity, o->fraction, c.seed};
    validate_spec(spec);
    std::vector<std::string> ids;
    for (const auto& s : scenes) ids.push_back(s.id);
    const auto chosen = select_corrupted_subset(ids, spec.fraction, spec.seed);
    for (auto& s : scenes) {
      if (std::find(chosen.begin(), chosen.end(), s.id) == chosen.end()) continue;
      s = corrupt_scene(s, spec.kind, spec.severity, corruption_seed(spec.seed, spec.kind, s.id));
    }
    std::ostringstream canon;
    canon << "kind=" << to_string(spec.kind) << ";severity=" << spec.severity
          << ";fraction=" << spec.fraction << ";input=" << hex64(in_prov.config_hash);
    write_scenes(scenes, {c.seed, fnv1a64(canon.str())}, o->out);
    const std::string manifest = o->manifest.empty() ? o->out + ".manifest" : o->manifest;
    std::ofstream mf(manifest);
    for (const auto& id : chosen) mf << id << "\n";
    if (!mf) throw IoError(kModule, "cannot write " + manifest);
    out << "corrupted " << chosen.size() << " of " << scenes.size() << " scenes (" << to_string(spec.kind)
        << ", severity " << spec.severity << ") -> " << o->out << "\n";
  };
}

void register_extract(CLI::App& app, Command& c) {
  struct Opts {
    std::string in, out, drop;
    std::size_t audio_dim = 64, visual_dim = 256;
  };
  auto o = std::make_shared<Opts>();
  c.app = app.add_subcommand("extract", "Extract per-segment features (RAF1)");
  add_common(c);
  c.app->add_option("--in", o->in, "Input scenes (RAS1)")->required()->check(CLI::ExistingFile);
  c.app->add_option("--out", o->out, "Output features (RAF1)")->required();
  c.app->add_option("--audio-dim", o->audio_dim, "Audio feature width");
  c.app->add_option("--visual-dim", o->visual_dim, "Visual feature width");
  c.app->add_option("--drop", o->drop, "Drop a modality entirely: audio | visual");
  c.run = [o, &c](std::ostream& out) {
    Provenance in_prov;
    const auto scenes = read_scenes(o->in, &in_prov);
    ExtractorConfig ec;
    ec.audio_dim = o->audio_dim;
    ec.visual_dim = o->visual_dim;
    validate_config(ec);
    auto bags = extract_all(scenes, ec);
    if (!o->drop.empty()) {
      const Modality m = parse_modality(o->drop);
      for (auto& b : bags) (m == Modality::Audio ? b.audio : b.visual).reset();
    }
    std::ostringstream canon;
    canon << "audio_dim=" << ec.audio_dim << ";visual_dim=" << ec.visual_dim << ";drop=" << o->drop
          << ";input=" << hex64(in_prov.config_hash);
    write_features(bags, o->out);
    write_feature_meta(o->out, {c.seed_given() ? c.seed : in_prov.seed, fnv1a64(canon.str())});
    out << "extracted " << bags.size() << " videos -> " << o->out << "\n";
  };
}

void register_train(CLI::App& app, Command& c) {
  struct Opts {
    std::string features, out, variant = "shared";
    TrainConfig tc;
    std::size_t top_k = 0;
  };
  auto o = std::make_shared<Opts>();
  c.app = app.add_subcommand("train", "Train a detector (RAM1)");
  add_common(c);
  c.app->add_option("--features", o->features, "Training features (RAF1)")->required()->check(CLI::ExistingFile);
  c.app->add_option("--out", o->out, "Output model (RAM1)")->required();
  c.app->add_option("--variant,--mode", o->variant, "shared | padding | concat");
  c.app->add_option("--epochs", o->tc.epochs, "Training epochs");
  c.app->add_option("--lr", o->tc.learning_rate, "Learning rate");
  c.app->add_option("--batch", o->tc.batch_size, "Bags per gradient step");
  c.app->add_option("--weight-decay", o->tc.weight_decay, "L2 penalty");
  c.app->add_option("--top-k", o->top_k, "Top-k size (0 = ceil(m/16)+1)");
  c.run = [o, &c](std::ostream& out) {
    const auto variant = parse_model_variant(o->variant);
    if (!variant) fail("unknown variant '" + o->variant + "'");
    TrainConfig tc = o->tc;
    tc.seed = c.seed;
    if (o->top_k > 0) tc.top_k = o->top_k;
    validate_config(tc);
    const auto bags = read_features(o->features);
    AnomalyModel model = *variant == ModelVariant::Concat ? train_concat(bags, tc)
                                                         : train_shared(bags, tc, *variant);
    std::ostringstream canon;
    canon << "variant=" << to_string(*variant) << ";epochs=" << tc.epochs << ";lr=" << tc.learning_rate
          << ";batch=" << tc.batch_size << ";wd=" << tc.weight_decay << ";top_k=" << o->top_k
          << ";features_seed=" << feature_seed(o->features);
    write_model(model, {c.seed, fnv1a64(canon.str())}, o->out);
    out << "trained " << to_string(*variant) << " model, final loss " << model.loss_history.back() << " -> "
        << o->out << "\n";
  };
}

void register_fit_gmm(CLI::App& app, Command& c) {
  struct Opts {
    std::string features, out, modality;
    GmmFitOptions go;
  };
  auto o = std::make_shared<Opts>();
  c.app = app.add_subcommand("fit-gmm", "Fit a clean-feature GMM for one modality (RAG1)");
  add_common(c);
  c.app->add_option("--features", o->features, "Clean training features (RAF1)")->required()->check(CLI::ExistingFile);
  c.app->add_option("--modality", o->modality, "audio | visual")->required();
  c.app->add_option("--out", o->out, "Output GMM (RAG1)")->required();
  c.app->add_option("--components,--k", o->go.components, "Mixture components");
  c.app->add_option("--max-iter", o->go.max_iter, "EM iteration cap");
  c.app->add_option("--tol", o->go.tol, "Stop when the average log-likelihood gain is below this");
  c.run = [o, &c](std::ostream& out) {
    const Modality m = parse_modality(o->modality);
    GmmFitOptions go = o->go;
    go.seed = c.seed;
    const auto bags = read_features(o->features);
    const auto fit = fit_gmm(stack_segments(bags, m), m, go);
    std::ostringstream canon;
    canon << "modality=" << o->modality << ";K=" << go.components << ";max_iter=" << go.max_iter
          << ";tol=" << go.tol;
    write_gmm({fit.params, std::nullopt}, {c.seed, fnv1a64(canon.str())}, o->out);
    out << "fitted " << o->modality << " GMM in " << fit.iterations << " iterations, avg log-likelihood "
        << fit.log_likelihood.back() << " -> " << o->out << "\n";
  };
}

void register_calibrate(CLI::App& app, Command& c) {
  struct Opts {
    std::string gmm, features, out;
    double target = 0.45, quantile = 0.95;
  };
  auto o = std::make_shared<Opts>();
  c.app = app.add_subcommand("calibrate", "Fit the NLL-to-weight sigmoid on clean features");
  add_common(c);
  c.app->add_option("--gmm", o->gmm, "GMM to calibrate (RAG1)")->required()->check(CLI::ExistingFile);
  c.app->add_option("--features", o->features, "Clean features (RAF1)")->required()->check(CLI::ExistingFile);
  c.app->add_option("--out", o->out, "Output GMM (defaults to --gmm)");
  c.app->add_option("--target", o->target, "Raw weight at the clean quantile");
  c.app->add_option("--quantile", o->quantile, "Clean NLL quantile");
  c.run = [o, &c](std::ostream& out) {
    Provenance prov;
    auto art = read_gmm(o->gmm, &prov);
    const auto bags = read_features(o->features);
    const auto nlls = nll_rows(stack_segments(bags, art.gmm.modality), art.gmm, Exec::Parallel);
    art.calibration = calibrate_sigmoid(nlls, o->target, o->quantile);
    if (c.seed_given()) prov.seed = c.seed;
    std::ostringstream canon;
    canon << hex64(prov.config_hash) << ";target=" << o->target << ";quantile=" << o->quantile;
    prov.config_hash = fnv1a64(canon.str());
    const std::string dst = o->out.empty() ? o->gmm : o->out;
    write_gmm(art, prov, dst);
    out << "calibrated " << to_string(art.gmm.modality) << " GMM: scale " << art.calibration->scale
        << ", shift " << art.calibration->shift << " -> " << dst << "\n";
  };
}

void register_eval(CLI::App& app, Command& c) {
  struct Opts {
    std::string features, model, scheme = "dynamic", gmm_audio, gmm_visual, trace_video, trace_out;
  };
  auto o = std::make_shared<Opts>();
  c.app = app.add_subcommand("eval", "Segment-level AP of one model and fusion scheme");
  add_common(c);
  c.app->add_option("--features", o->features, "Test features with segment truth (RAF1)")->required()->check(CLI::ExistingFile);
  c.app->add_option("--model", o->model, "Trained model (RAM1)")->required()->check(CLI::ExistingFile);
  c.app->add_option("--scheme", o->scheme, "naive | dynamic | concat");
  c.app->add_option("--gmm-audio", o->gmm_audio, "Calibrated audio GMM (dynamic only)")->check(CLI::ExistingFile);
  c.app->add_option("--gmm-visual", o->gmm_visual, "Calibrated visual GMM (dynamic only)")->check(CLI::ExistingFile);
  c.app->add_option("--trace-video", o->trace_video, "Also dump the per-segment trace of this video");
  c.app->add_option("--trace-out", o->trace_out, "Trace CSV path (stdout when empty)");
  c.run = [o](std::ostream& out) {
    const auto scheme = parse_fusion_scheme(o->scheme);
    const auto model = read_model(o->model);
    std::optional<CalibratedGmm> ga, gv;
    if (scheme == FusionScheme::Dynamic) {
      if (o->gmm_audio.empty() || o->gmm_visual.empty()) fail("dynamic scheme needs --gmm-audio and --gmm-visual");
      ga = load_calibrated(o->gmm_audio);
      gv = load_calibrated(o->gmm_visual);
    }
    const ScoringModels sm{&model, ga ? &*ga : nullptr, gv ? &*gv : nullptr};
    const auto bags = read_features(o->features);
    char ap[32];
    std::snprintf(ap, sizeof ap, "%.8f", evaluate(bags, sm, scheme));
    out << "AP " << ap << "\n";
    if (o->trace_video.empty()) return;
    const auto it = std::find_if(bags.begin(), bags.end(), [&](const VideoBag& b) { return b.id == o->trace_video; });
    if (it == bags.end()) fail("no video '" + o->trace_video + "' in " + o->features);
    const auto csv = trace_csv(score_video_trace(*it, sm, scheme));
    if (o->trace_out.empty()) {
      out << csv;
    } else {
      std::ofstream f(o->trace_out);
      if (!(f << csv)) throw IoError(kModule, "cannot write " + o->trace_out);
    }
  };
}

void register_sweep(CLI::App& app, Command& c) {
  struct Opts {
    std::string scenes, models, gmm_audio, gmm_visual, conditions, levels, schemes, out = "report.csv";
    int severity = kDefaultSeverity;
  };
  auto o = std::make_shared<Opts>();
  c.app = app.add_subcommand("sweep", "Corruption sweep over kinds, levels, schemes and variants");
  add_common(c);
  c.app->add_option("--scenes", o->scenes, "Clean test scenes (RAS1)")->required()->check(CLI::ExistingFile);
  c.app->add_option("--models", o->models, "Comma-separated RAM1 files, one per variant")->required();
  c.app->add_option("--gmm-audio", o->gmm_audio, "Calibrated audio GMM")->check(CLI::ExistingFile);
  c.app->add_option("--gmm-visual", o->gmm_visual, "Calibrated visual GMM")->check(CLI::ExistingFile);
  c.app->add_option("--conditions", o->conditions,
                    "Comma-separated kinds, mixed_<mod>, missing_<mod> or a+b (default: all 16 kinds)");
  c.app->add_option("--levels", o->levels, "Comma-separated corruption fractions");
  c.app->add_option("--schemes", o->schemes, "Comma-separated schemes (default: all that fit the models)");
  c.app->add_option("--severity", o->severity, "Severity 1..5");
  c.app->add_option("--out", o->out, "Report CSV");
  c.run = [o, &c](std::ostream& out) {
    std::vector<AnomalyModel> models;
    for (const auto& p : split_list(o->models)) {
      if (!fs::exists(p)) fail("model file '" + p + "' does not exist");
      models.push_back(read_model(p));
    }
    if (models.empty()) fail("--models lists no files");
    SweepConfig sc;
    sc.seed = c.seed;
    sc.severity = o->severity;
    SweepModels sm;
    for (const auto& m : models) {
      if (m.audio_dim != models.front().audio_dim || m.visual_dim != models.front().visual_dim) {
        fail("models disagree on feature widths");
      }
      sm.models.push_back(&m);
      sc.variants.push_back(m.variant);
    }
    if (o->conditions.empty()) {
      sc.conditions = single_kind_conditions();
    } else {
      for (const auto& t : split_list(o->conditions)) sc.conditions.push_back(parse_sweep_condition(t));
    }
    if (!o->levels.empty()) {
      sc.levels.clear();
      for (const auto& t : split_list(o->levels)) sc.levels.push_back(std::stod(t));
    }
    if (o->schemes.empty()) {
      for (auto s : {FusionScheme::NaiveAverage, FusionScheme::Dynamic, FusionScheme::ConcatBaseline}) {
        if (std::any_of(sc.variants.begin(), sc.variants.end(), [&](ModelVariant v) { return scheme_accepts(s, v); })) {
          sc.schemes.push_back(s);
        }
      }
    } else {
      for (const auto& t : split_list(o->schemes)) sc.schemes.push_back(parse_fusion_scheme(t));
    }
    std::optional<CalibratedGmm> ga, gv;
    if (!o->gmm_audio.empty()) ga = load_calibrated(o->gmm_audio);
    if (!o->gmm_visual.empty()) gv = load_calibrated(o->gmm_visual);
    sm.audio = ga ? &*ga : nullptr;
    sm.visual = gv ? &*gv : nullptr;
    const auto scenes = read_scenes(o->scenes);
    ExtractorConfig ec;
    ec.audio_dim = models.front().audio_dim;
    ec.visual_dim = models.front().visual_dim;
    const auto report = run_sweep(sc, scenes, sm, ec);
    std::ofstream f(o->out, std::ios::binary);
    if (!(f << report.to_csv())) throw IoError(kModule, "cannot write " + o->out);
    out << "wrote " << report.rows.size() << " rows -> " << o->out << "\n";
  };
}

void register_report(CLI::App& app, Command& c) {
  auto in = std::make_shared<std::string>();
  c.app = app.add_subcommand("report", "Print a report CSV as an aligned table");
  add_common(c);
  c.app->add_option("--in", *in, "Report CSV")->required()->check(CLI::ExistingFile);
  c.run = [in](std::ostream& out) {
    std::ifstream f(*in);
    std::stringstream ss;
    ss << f.rdbuf();
    out << format_table(ss.str());
  };
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError(kModule, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Value of --config in args after the subcommand, if any.
std::optional<std::string> find_config(const std::vector<std::string>& args, std::size_t from) {
  std::optional<std::string> path;
  for (std::size_t i = from; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  return path;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("config line " + std::to_string(line_no) + " has no '='");
    auto key = trim(line.substr(0, eq));
    if (key.empty()) fail("config line " + std::to_string(line_no) + " has an empty key");
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::string format_table(std::string_view csv) {
  std::vector<std::vector<std::string>> rows;
  std::size_t start = 0;
  while (start < csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    const auto line = trim(csv.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t s = 0;
    while (true) {
      const auto comma = line.find(',', s);
      cells.push_back(line.substr(s, comma == std::string::npos ? std::string::npos : comma - s));
      if (comma == std::string::npos) break;
      s = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    if (width.size() < r.size()) width.resize(r.size(), 0);
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i > 0) line += "  ";
      line += r[i];
      if (i + 1 < r.size()) line.append(width[i] - r[i].size(), ' ');
    }
    out += line + "\n";
  }
  return out;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_threads_from_env();

  CLI::App app{"Robust audio-visual anomaly detection toolkit", "robusta"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  std::vector<Command> commands(9);
  register_gen(app, commands[0]);
  register_corrupt(app, commands[1]);
  register_extract(app, commands[2]);
  register_train(app, commands[3]);
  register_fit_gmm(app, commands[4]);
  register_calibrate(app, commands[5]);
  register_eval(app, commands[6]);
  register_sweep(app, commands[7]);
  register_report(app, commands[8]);

  try {
    std::vector<std::string> argv = args;
    // Config values go in right after the subcommand so later flags win.
    const auto sub_pos = std::find_if(argv.begin(), argv.end(), [](const std::string& a) { return !a.starts_with("-"); });
    if (sub_pos != argv.end()) {
      CLI::App* sub = app.get_subcommand_no_throw(*sub_pos);
      const auto from = static_cast<std::size_t>(sub_pos - argv.begin()) + 1;
      if (sub != nullptr) {
        if (const auto path = find_config(argv, from)) {
          std::vector<std::string> injected;
          for (const auto& [key, value] : parse_config_text(read_text(*path))) {
            if (key == "config" || sub->get_option_no_throw("--" + key) == nullptr) continue;
            injected.push_back("--" + key);
            injected.push_back(value);
          }
          argv.insert(argv.begin() + static_cast<std::ptrdiff_t>(from), injected.begin(), injected.end());
        }
      }
    }
    std::reverse(argv.begin(), argv.end());
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "ERROR " << kModule << ": " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "ERROR " << e.module() << ": " << e.what() << "\n";
    return kExitFailure;
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      c.run(out);
      return kExitOk;
    } catch (const Error& e) {
      err << "ERROR " << e.module() << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
      err << "ERROR " << kModule << ": " << e.what() << "\n";
    }
    return kExitFailure;
  }
  err << "ERROR " << kModule << ": no subcommand given\n" << app.help();
  return kExitUsage;
}

}  // namespace robusta::cli
