// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "robusta/detector.hpp"
#include "robusta/evalbench.hpp"
#include "robusta/extractors.hpp"
#include "robusta/fusion.hpp"
#include "robusta/gmm.hpp"
#include "robusta/rng.hpp"
#include "robusta/synthgen.hpp"

namespace fs = std::filesystem;
using namespace robusta;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix gaussian(std::size_t n, std::size_t d, double center, double sd, Rng& rng) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = center + sd * rng.normal();
  }
  return x;
}

void gradient_correctness() {
  const auto t0 = Clock::now();
  GenConfig gc;
  gc.train_count = 24;
  gc.test_count = 1;
  const auto bags = extract_all(generate_dataset(gc).train, ExtractorConfig{});
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (auto variant : {ModelVariant::SharedProjection, ModelVariant::SharedPadding, ModelVariant::Concat}) {
    TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 1;
    // A few epochs of training move the biases away from zero.
    const auto model = variant == ModelVariant::Concat ? train_concat(bags, tc) : train_shared(bags, tc, variant);
    std::vector<PreparedSample> samples;
    for (const auto& b : bags) {
      if (is_shared(variant)) {
        samples.push_back(prepare_sample(model, b, SampleView::AudioView));
        samples.push_back(prepare_sample(model, b, SampleView::VisualView));
      } else {
        samples.push_back(prepare_sample(model, b, SampleView::ConcatView));
      }
    }
    GradientCheckOptions opts;
    opts.probes = 100;
    opts.seed = 7;
    const auto r = gradient_check(model, samples, opts);
    worst = std::max(worst, r.max_relative_error);
    checked += r.checked;
    skipped += r.skipped;
  }
  const double secs = seconds_since(t0);
  report(1, worst < 1e-4 && secs < 30.0 && checked >= 250,
         fmt("max relative error %.3g over %zu probes (%zu skipped at kinks), %.1f s", worst, checked, skipped, secs));
}

void em_monotonicity() {
  Rng rng(11);
  Matrix x(600, 6);
  x << gaussian(200, 6, 0.0, 1.0, rng), gaussian(200, 6, 2.0, 0.5, rng), gaussian(200, 6, -1.0, 0.2, rng);
  GmmFitOptions opts;
  opts.components = 8;
  opts.seed = 3;
  opts.tol = 0.0;
  opts.max_iter = 80;
  const auto fit = fit_gmm(x, Modality::Visual, opts);
  double worst_drop = 0.0;
  for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i) {
    worst_drop = std::max(worst_drop, fit.log_likelihood[i - 1] - fit.log_likelihood[i]);
  }
  report(2, fit.iterations >= 50 && worst_drop <= 1e-9,
         fmt("%zu EM iterations, largest decrease %.3g", fit.iterations, worst_drop));
}

void gmm_recovery() {
  Rng rng(12);
  const std::size_t n = 500, d = 2;
  Matrix x(2 * n, d);
  x << gaussian(n, d, 0.0, 0.1, rng), gaussian(n, d, 10.0, 0.1, rng);
  GmmFitOptions opts;
  opts.components = 2;
  opts.seed = 1;
  const auto g = fit_gmm(x, Modality::Visual, opts).params;
  double worst_truth = 0.0, worst_oracle = 0.0;
  for (int c = 0; c < 2; ++c) {
    const double center = 10.0 * c;
    const Eigen::Index k = std::abs(g.means(0, 0) - center) < std::abs(g.means(1, 0) - center) ? 0 : 1;
    const RowVector oracle = x.middleRows(c * static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)).colwise().mean();
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j) {
      worst_truth = std::max(worst_truth, std::abs(g.means(k, j) - center));
      worst_oracle = std::max(worst_oracle, std::abs(g.means(k, j) - oracle[j]));
    }
  }
  report(3, worst_truth < 0.05 && worst_oracle < 0.05,
         fmt("max mean error %.3g vs centers, %.3g vs per-cluster sample means", worst_truth, worst_oracle));
}

void nll_closed_form() {
  GmmParams g;
  g.weights = {1.0};
  g.means = Matrix::Zero(1, 1);
  g.variances = Matrix::Ones(1, 1);
  const double half_log = 0.5 * std::log(2.0 * std::numbers::pi);
  const std::vector<double> zero = {0.0}, one = {1.0};
  const double e0 = std::abs(nll(zero, g) - half_log), e1 = std::abs(nll(one, g) - (half_log + 0.5));
  report(4, e0 <= 1e-9 && e1 <= 1e-9, fmt("errors %.3g at x=0 and %.3g at x=1", e0, e1));
}

// Walks every cutoff of the ranking and adds the precision at each cutoff
// where recall grows.
double pr_integration(const std::vector<double>& s, const std::vector<std::uint8_t>& t) {
  const std::size_t n = s.size();
  std::size_t positives = 0;
  for (auto v : t) positives += v;
  double area = 0.0;
  for (std::size_t cutoff = 1; cutoff <= n; ++cutoff) {
    // Item at this cutoff: the one with exactly cutoff-1 items ranked ahead.
    std::size_t item = n, hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t ahead = 0;
      for (std::size_t j = 0; j < n; ++j) ahead += s[j] > s[i] || (s[j] == s[i] && j < i);
      if (ahead + 1 <= cutoff) hits += t[i];
      if (ahead + 1 == cutoff) item = i;
    }
    if (t[item]) area += static_cast<double>(hits) / static_cast<double>(cutoff);
  }
  return area / static_cast<double>(positives);
}

void ap_oracle() {
  Rng rng(13);
  std::size_t cases = 0, mismatches = 0;
  while (cases < 10000) {
    for (std::size_t n = 1; n <= 8; ++n) {
      std::vector<double> s(n);
      const bool ties = rng.below(2) == 0;
      for (auto& v : s) v = ties ? static_cast<double>(rng.below(3)) : rng.uniform();
      for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::uint8_t> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = (mask >> i) & 1u;
        mismatches += average_precision(s, t) != pr_integration(s, t);
        ++cases;
      }
    }
  }
  const double hand = average_precision(std::vector<double>{0.9, 0.8, 0.7, 0.6}, std::vector<std::uint8_t>{1, 0, 1, 0});
  report(5, mismatches == 0 && std::abs(hand - 5.0 / 6.0) <= 1e-12,
         fmt("%zu mismatches in %zu cases, hand case %.15f", mismatches, cases, hand));
}

void weight_algebra() {
  Rng rng(14);
  double worst_mid = 0.0;
  bool confined = true, strict = true;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> nlls(400);
    for (auto& v : nlls) v = rng.uniform(-50.0, 400.0) + 30.0 * rng.normal();
    const auto cal = calibrate_sigmoid(nlls, rng.uniform(0.26, 0.49), rng.uniform(0.6, 0.99));
    worst_mid = std::max(worst_mid, std::abs(dynamic_weight(-cal.shift, cal) - 0.25));
    // Sorted grid spanning ten logistic widths either side of the midpoint.
    std::vector<double> grid(2000);
    for (auto& g : grid) g = -cal.shift + rng.uniform(-10.0, 10.0) / cal.scale;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double prev = 0.5;
    for (double g : grid) {
      const double w = dynamic_weight(g, cal);
      confined = confined && w > 0.0 && w < 0.5;
      strict = strict && w < prev;
      prev = w;
    }
    for (double extreme : {-1e300, -1e9, 1e9, 1e300}) {
      const double w = dynamic_weight(extreme, cal);
      confined = confined && w > 0.0 && w < 0.5;
    }
  }
  report(6, worst_mid <= 1e-12 && confined && strict,
         fmt("midpoint error %.3g, confined %s, strictly decreasing %s", worst_mid, confined ? "yes" : "no",
             strict ? "yes" : "no"));
}

// Artifacts of one desk-scale seed.
struct DeskRun {
  SceneSplit scenes;
  AnomalyModel shared, padding, concat;
  CalibratedGmm audio, visual;
  SweepReport sweep;
  double train_seconds = 0.0, sweep_seconds = 0.0;
};

DeskRun desk_run(std::uint64_t seed) {
  DeskRun r;
  auto t0 = Clock::now();
  GenConfig gc;
  gc.seed = seed;
  r.scenes = generate_dataset(gc);
  const ExtractorConfig ec;
  const auto train = extract_all(r.scenes.train, ec);
  TrainConfig tc;
  tc.seed = seed;
  r.shared = train_shared(train, tc, ModelVariant::SharedProjection);
  r.padding = train_shared(train, tc, ModelVariant::SharedPadding);
  r.concat = train_concat(train, tc);
  GmmFitOptions go;
  go.seed = seed;
  for (auto [mod, dst] : {std::pair{Modality::Audio, &r.audio}, std::pair{Modality::Visual, &r.visual}}) {
    const Matrix x = stack_segments(train, mod);
    dst->gmm = fit_gmm(x, mod, go).params;
    dst->calibration = calibrate_sigmoid(nll_rows(x, dst->gmm));
  }
  r.train_seconds = seconds_since(t0);
  t0 = Clock::now();
  SweepConfig sc;
  sc.conditions = single_kind_conditions();
  sc.schemes = {FusionScheme::NaiveAverage, FusionScheme::Dynamic, FusionScheme::ConcatBaseline};
  sc.variants = {ModelVariant::SharedProjection, ModelVariant::SharedPadding, ModelVariant::Concat};
  sc.seed = seed;
  const SweepModels models{{&r.shared, &r.padding, &r.concat}, &r.audio, &r.visual};
  r.sweep = run_sweep(sc, r.scenes.test, models, ec);
  r.sweep_seconds = seconds_since(t0);
  return r;
}

void missing_modality(const DeskRun& run) {
  const auto test = extract_all(run.scenes.test, ExtractorConfig{});
  const ScoringModels sm{&run.shared, &run.audio, &run.visual};
  std::size_t bags = 0, differing = 0;
  for (auto bag : test) {
    bag.audio.reset();
    const auto fused = score_video(bag, sm, FusionScheme::Dynamic);
    differing += fused != run.shared.score_visual(*bag.visual);
    ++bags;
  }
  report(7, differing == 0 && bags == test.size(),
         fmt("%zu audio-absent bags, %zu with fused != visual-only scores", bags, differing));
}

// 3-seed mean AP of one sweep cell.
double mean_ap(const std::vector<DeskRun>& runs, const std::string& kind, double level, FusionScheme scheme,
               ModelVariant variant) {
  double s = 0.0;
  for (const auto& r : runs) s += r.sweep.find(kind, level, scheme, variant).ap;
  return s / static_cast<double>(runs.size());
}

void trend_criteria(const std::vector<DeskRun>& runs) {
  const auto shared = ModelVariant::SharedProjection;
  std::size_t within = 0, beats_concat = 0;
  double worst_drop = 0.0;
  std::string worst_kind, losses;
  std::printf("\n%-14s %8s %8s %8s %8s %8s\n", "kind", "dyn@0", "dyn@100", "naive@100", "concat@100", "dyn-naive");
  std::vector<double> diffs;
  std::string below;
  for (const auto& cond : single_kind_conditions()) {
    const auto kind = cond.name();
    const double d0 = mean_ap(runs, kind, 0.0, FusionScheme::Dynamic, shared);
    const double d1 = mean_ap(runs, kind, 1.0, FusionScheme::Dynamic, shared);
    const double n1 = mean_ap(runs, kind, 1.0, FusionScheme::NaiveAverage, shared);
    const double c1 = mean_ap(runs, kind, 1.0, FusionScheme::ConcatBaseline, ModelVariant::Concat);
    std::printf("%-14s %8.4f %8.4f %8.4f %8.4f %+8.4f\n", kind.c_str(), d0, d1, n1, c1, d1 - n1);
    if (d0 - d1 <= 0.15) ++within;
    if (d0 - d1 > worst_drop) {
      worst_drop = d0 - d1;
      worst_kind = kind;
    }
    if (d1 > c1) ++beats_concat;
    else losses += " " + kind;
    diffs.push_back(d1 - n1);
    if (d1 < n1 - 0.01) below += fmt(" %s (%.4f vs %.4f)", kind.c_str(), d1, n1);
  }
  std::printf("\n");
  const std::size_t k = diffs.size();
  const bool pass_a = within == k, pass_b = beats_concat >= 12;
  report(8, pass_a && pass_b,
         fmt("(a) %zu/%zu kinds within 0.15 of clean (largest drop %.4f, %s); (b) shared+dynamic beats concat on "
             "%zu/%zu kinds%s%s",
             within, k, worst_drop, worst_kind.c_str(), beats_concat, k, losses.empty() ? "" : ", loses on",
             losses.c_str()));

  double mean_diff = 0.0;
  for (double d : diffs) mean_diff += d / static_cast<double>(k);
  report(9, below.empty() && mean_diff > 0.0,
         fmt("mean dynamic-naive %+.4f; kinds below naive-0.01:%s", mean_diff, below.empty() ? " none" : below.c_str()));

  // Sweep average over every kind and level of the dynamic rows.
  double proj = 0.0, pad = 0.0;
  std::size_t cells = 0;
  for (const auto& r : runs) {
    for (const auto& row : r.sweep.rows) {
      if (row.scheme != FusionScheme::Dynamic) continue;
      if (row.variant == ModelVariant::SharedProjection) {
        proj += row.ap;
        ++cells;
      } else if (row.variant == ModelVariant::SharedPadding) {
        pad += row.ap;
      }
    }
  }
  proj /= static_cast<double>(cells);
  pad /= static_cast<double>(cells);
  report(10, pad < proj, fmt("sweep-average AP projection %.4f, padding %.4f", proj, pad));
}

// gen -> extract -> train -> fit-gmm -> calibrate -> sweep through the CLI.
std::string cli_pipeline(const fs::path& dir, int threads, const std::vector<std::string>& gen_size,
                         const std::string& epochs) {
  setenv("ROBUSTA_THREADS", std::to_string(threads).c_str(), 1);
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  auto run = [&](std::vector<std::string> args) {
    std::ostringstream out, err;
    if (cli::dispatch(args, out, err) != cli::kExitOk) throw std::runtime_error(err.str());
  };
  std::vector<std::string> gen = {"gen", "--seed", "0", "--out-train", p("tr.ras"), "--out-test", p("te.ras")};
  gen.insert(gen.end(), gen_size.begin(), gen_size.end());
  run(gen);
  run({"extract", "--in", p("tr.ras"), "--out", p("tr.raf")});
  for (const char* v : {"shared", "padding", "concat"}) {
    run({"train", "--features", p("tr.raf"), "--variant", v, "--epochs", epochs, "--out", p(std::string(v) + ".ram")});
  }
  for (const char* m : {"audio", "visual"}) {
    run({"fit-gmm", "--features", p("tr.raf"), "--modality", m, "--out", p(std::string(m) + ".rag")});
    run({"calibrate", "--gmm", p(std::string(m) + ".rag"), "--features", p("tr.raf")});
  }
  run({"sweep", "--scenes", p("te.ras"), "--models", p("shared.ram") + "," + p("padding.ram") + "," + p("concat.ram"),
       "--gmm-audio", p("audio.rag"), "--gmm-visual", p("visual.rag"), "--out", p("report.csv")});
  std::ifstream f(p("report.csv"), std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  unsetenv("ROBUSTA_THREADS");
  return ss.str();
}

void determinism() {
  const auto t0 = Clock::now();
  const auto base = fs::temp_directory_path() / "robusta_acceptance";
  const std::vector<std::string> size = {"--train", "80", "--test", "30"};
  std::vector<std::string> reports;
  for (int threads : {1, 1, 4, 4}) reports.push_back(cli_pipeline(base / "run", threads, size, "10"));
  bool same = !reports[0].empty();
  for (const auto& r : reports) same = same && r == reports[0];
  const auto rows = std::count(reports[0].begin(), reports[0].end(), '\n') - 1;
  fs::remove_all(base);
  report(11, same,
         fmt("4 CLI runs (threads 1,1,4,4; 80/30 videos, 10 epochs, %ld sweep rows) %s, %.0f s", static_cast<long>(rows),
             same ? "byte-identical" : "DIFFER", seconds_since(t0)));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  set_thread_count(4);
  gradient_correctness();
  em_monotonicity();
  gmm_recovery();
  nll_closed_form();
  ap_oracle();
  weight_algebra();

  std::vector<DeskRun> runs;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    runs.push_back(desk_run(seed));
    std::printf("seed %llu: training %.0f s, sweep %.0f s (%zu rows)\n", static_cast<unsigned long long>(seed),
                runs.back().train_seconds, runs.back().sweep_seconds, runs.back().sweep.rows.size());
    std::fflush(stdout);
  }
  missing_modality(runs.front());
  trend_criteria(runs);
  set_thread_count(4);
  determinism();

  std::printf("\n%d of 11 criteria failed, total %.0f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
