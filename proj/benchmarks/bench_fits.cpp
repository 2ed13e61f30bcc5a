#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "mateoptix/lsq.hpp"
#include "mateoptix/pipelines.hpp"

using namespace mateoptix;

namespace {

void BM_LsqExponential(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> t, y;
  for (int i = 0; i < state.range(0); ++i) {
    t.push_back(0.01 * i);
    y.push_back(2.0 * std::exp(-1.3 * t.back()) + 0.5 + noise(rng));
  }
  FitProblem p;
  p.parameters = {{"a", 1.0}, {"b", 1.0}, {"c", 0.0}};
  p.residuals = [&](const std::vector<double>& q, std::vector<double>& r) {
    r.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) r[i] = (q[0] * std::exp(-q[1] * t[i]) + q[2] - y[i]) / 0.01;
  };
  for (auto _ : state) benchmark::DoNotOptimize(least_squares_solve(p));
}
BENCHMARK(BM_LsqExponential)->Arg(100)->Arg(1000);

void BM_MapFit(benchmark::State& state) {
  MapSynthConfig sc;
  sc.x_stretch = {0, 100, 0.5e-6, 2.0, 0.03, -0.02, 0.01};
  sc.l_stretch = {0, 100, 1.5e-6, 0.0, 0.02, 0.01, -0.01};
  const auto data = synth_resonance_map(sc);
  MapFitConfig fc;
  fc.d_init = 80e-9;
  fc.x_stretch = {0, 100, 0.5e-6, 2.0};
  fc.l_stretch = {0, 100, 1.5e-6};
  for (auto _ : state) benchmark::DoNotOptimize(fit_resonance_map(data, fc));
}
BENCHMARK(BM_MapFit)->Unit(benchmark::kMillisecond);

void BM_TransmissionFitSingleOrder(benchmark::State& state) {
  TransmissionSynthConfig ts;
  ts.relative_noise = 0.01;
  const auto data = synth_transmission(ts);
  TransmissionFitConfig fc;
  fc.l0_min = fc.l0_max = 24;
  for (auto _ : state) benchmark::DoNotOptimize(fit_transmission_global(data, fc));
}
BENCHMARK(BM_TransmissionFitSingleOrder)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
