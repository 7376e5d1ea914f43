// Serial reference vs OpenMP kernel timings. Arg(0) is Serial, Arg(1) Parallel.

#include <benchmark/benchmark.h>

#include "robusta/evalbench.hpp"
#include "robusta/extractors.hpp"
#include "robusta/gmm.hpp"
#include "robusta/synthgen.hpp"

namespace robusta {
namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

GenConfig bench_gen() {
  GenConfig gc;
  gc.train_count = 48;
  gc.test_count = 16;
  return gc;
}

const SceneSplit& scenes() {
  static const SceneSplit s = generate_dataset(bench_gen());
  return s;
}

const std::vector<VideoBag>& train_bags() {
  static const auto b = extract_all(scenes().train, ExtractorConfig{});
  return b;
}

void BM_Generate(benchmark::State& state) {
  const auto gc = bench_gen();
  for (auto _ : state) benchmark::DoNotOptimize(generate_dataset(gc, exec_of(state)));
}
BENCHMARK(BM_Generate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Extract(benchmark::State& state) {
  const ExtractorConfig ec;
  const auto& train = scenes().train;
  for (auto _ : state) benchmark::DoNotOptimize(extract_all(train, ec, exec_of(state)));
}
BENCHMARK(BM_Extract)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GmmEStep(benchmark::State& state) {
  const Matrix x = stack_segments(train_bags(), Modality::Visual);
  static const GmmParams g = fit_gmm(x, Modality::Visual, GmmFitOptions{}).params;
  std::vector<double> ll;
  Matrix r;
  for (auto _ : state) {
    gmm_estep(x, g, ll, r, exec_of(state));
    benchmark::DoNotOptimize(r.data());
  }
}
BENCHMARK(BM_GmmEStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  static const auto test = extract_all(scenes().test, ExtractorConfig{});
  static const AnomalyModel model = [] {
    TrainConfig tc;
    tc.epochs = 2;
    return train_shared(train_bags(), tc);
  }();
  static const CalibratedGmm audio = [] {
    const Matrix x = stack_segments(train_bags(), Modality::Audio);
    const auto g = fit_gmm(x, Modality::Audio, GmmFitOptions{}).params;
    return CalibratedGmm{g, calibrate_sigmoid(nll_rows(x, g))};
  }();
  static const CalibratedGmm visual = [] {
    const Matrix x = stack_segments(train_bags(), Modality::Visual);
    const auto g = fit_gmm(x, Modality::Visual, GmmFitOptions{}).params;
    return CalibratedGmm{g, calibrate_sigmoid(nll_rows(x, g))};
  }();
  const ScoringModels sm{&model, &audio, &visual};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(test, sm, FusionScheme::Dynamic, exec_of(state)));
}
BENCHMARK(BM_Evaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace robusta

BENCHMARK_MAIN();
