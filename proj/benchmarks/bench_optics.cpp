#include <benchmark/benchmark.h>

#include <vector>

#include "mateoptix/resonance.hpp"
#include "mateoptix/spectra.hpp"
#include "mateoptix/tilt.hpp"

using namespace mateoptix;

namespace {

CavityModel cavity() {
  CavityModel m;
  m.length_l = 0.1;
  m.mirror1 = Mirror::from_power_transmission(7.5e-3, 8e-4);
  m.mirror2 = Mirror::from_power_transmission(6e-4);
  m.membrane = Slab{2.0, 88e-9};
  m.mode_match_eps = 0.75;
  return m;
}

void BM_StackResponse(benchmark::State& state) {
  const CavityModel m = cavity();
  const int n = m.mode_index();
  double offset = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(stack_response_at(m, n, offset, 20e-6));
    offset += 1e-3;
  }
}
BENCHMARK(BM_StackResponse);

void BM_SolveResonance(benchmark::State& state) {
  const CavityModel m = cavity();
  CavityGeometry g;
  g.length_l = m.length_l;
  g.mode_index_n = m.mode_index();
  double x = 20e-6;
  for (auto _ : state) {
    g.membrane_x = x;
    benchmark::DoNotOptimize(solve_resonant_k(g, m.membrane, g.mode_index_n, m.mirror1, m.mirror2));
    x += 1e-10;
  }
}
BENCHMARK(BM_SolveResonance);

void BM_PositionSweep(benchmark::State& state) {
  const CavityModel m = cavity();
  std::vector<double> xs;
  for (int i = 0; i < state.range(0); ++i) xs.push_back(20e-6 + i * 0.775e-6 / state.range(0));
  const auto method = static_cast<SweepMethod>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(position_sweep(m, xs, method));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PositionSweep)
    ->Args({32, static_cast<int>(SweepMethod::kDirect)})
    ->Args({32, static_cast<int>(SweepMethod::kLorentzian)})
    ->Unit(benchmark::kMillisecond);

TiltedCavity tilted(double k_theta_sigma) {
  TiltedCavity c;
  c.x0 = 5e-6;
  c.sigma = 100e-6;
  c.theta = k_theta_sigma / (2 * kPi / 1550e-9 * c.sigma);
  c.mirror1 = Mirror::from_power_transmission(0.0065);
  c.membrane = Slab{2.0, 88e-9};
  return c;
}

void BM_TiltAnalytic(benchmark::State& state) {
  const TiltedCavity c = tilted(0.05);
  const double k = 2 * kPi / 1550e-9;
  for (auto _ : state) benchmark::DoNotOptimize(tilted_transmission_analytic(c, k));
}
BENCHMARK(BM_TiltAnalytic);

void BM_TiltQuadrature(benchmark::State& state) {
  const TiltedCavity c = tilted(0.05);
  const double k = 2 * kPi / 1550e-9;
  for (auto _ : state) benchmark::DoNotOptimize(tilted_transmission_quadrature(c, k));
}
BENCHMARK(BM_TiltQuadrature)->Unit(benchmark::kMicrosecond);

}  // namespace
