#include <random>

#include <benchmark/benchmark.h>

#include "chfield/gp.hpp"

using namespace chfield;

namespace {

SpatialDataset design(int n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SpatialDataset d;
  d.locations.resize(n, 2);
  d.values = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    d.locations(i, 0) = u(rng);
    d.locations(i, 1) = u(rng);
    d.var_index.push_back(i % 2);
  }
  return d;
}

CovarianceSpec study_truth_ch() {
  Matrix s(2, 2);
  s << 1.0, 0.6, 0.6, 1.0;
  return CovarianceSpec::from_params(build_pars_like({{1.75, 1.1, 0.015}, {1.25, 1.9, 0.015}}, s), 2);
}

void run(benchmark::State& state, Assembly mode, bool tabulate) {
  const SpatialDataset d = design(static_cast<int>(state.range(0)));
  ModelOptions opts;
  opts.tabulate = tabulate;
  opts.cache_r_min = 1e-4;
  opts.cache_r_max = 1.5;
  opts.cache_points = 400;
  const CovarianceModel model(study_truth_ch(), opts);
  for (auto _ : state) benchmark::DoNotOptimize(cov_matrix(model, d, d, mode));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_AssemblySerial(benchmark::State& s) { run(s, Assembly::Serial, false); }
void BM_AssemblyParallel(benchmark::State& s) { run(s, Assembly::Parallel, false); }
void BM_AssemblyParallelTabulated(benchmark::State& s) { run(s, Assembly::Parallel, true); }

void BM_LoglikStudyDesign(benchmark::State& state) {
  SpatialDataset d = design(300);
  const CovarianceModel model(study_truth_ch());
  d.values = simulate(model, d, 5);
  for (auto _ : state) benchmark::DoNotOptimize(loglik(model, d));
}

}  // namespace

BENCHMARK(BM_AssemblySerial)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssemblyParallel)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssemblyParallelTabulated)->Arg(200)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LoglikStudyDesign)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
