#include "mateoptix/pipelines.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mateoptix;

namespace {

MapSynthConfig map_truth() {
  MapSynthConfig sc;
  sc.x_stretch = {0, 100, 0.5e-6, 2.0, 0.03, -0.02, 0.01};
  sc.l_stretch = {0, 100, 1.5e-6, 0.0, 0.02, 0.01, -0.01};
  sc.thin_convention = true;
  sc.exact_root = false;
  return sc;
}

MapFitConfig map_init() {
  MapFitConfig fc;
  fc.convention = MembraneConvention::kThin;
  fc.d_init = 80e-9;
  fc.x_stretch = {0, 100, 0.5e-6, 2.0, 0, 0, 0};
  fc.l_stretch = {0, 100, 1.5e-6, 0, 0, 0, 0};
  return fc;
}

CavityModel loss_truth() {
  CavityModel m;
  m.length_l = 0.1;
  m.mirror1 = Mirror::from_power_transmission(7.5e-3, 8e-4);
  m.mirror2 = Mirror::from_power_transmission(6e-4);
  m.membrane = Slab{2.0, 88e-9};
  m.mode_match_eps = 0.75;
  return m;
}

std::vector<double> loss_grid() {
  std::vector<double> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(20e-6 + i * 1.55e-6 / 40);
  return xs;
}

LossFitConfig loss_init() {
  LossFitConfig lc;
  lc.model = loss_truth();
  lc.model.mode_match_eps = 0.6;
  lc.model.mirror1 = Mirror::from_power_transmission(5e-3, 5e-4);
  lc.model.mirror2 = Mirror::from_power_transmission(1e-3);
  return lc;
}

}  // namespace

TEST(MapFit, NoiselessRoundTrip) {
  const MapSynthConfig sc = map_truth();
  const auto data = synth_resonance_map(sc);
  const auto f = fit_resonance_map(data, map_init());
  ASSERT_TRUE(f.fit.converged) << f.fit.status;
  EXPECT_NEAR(f.fit.value("d") / 88e-9, 1.0, 1e-3);
  const PolyStretch& x = f.x_stretch;
  EXPECT_NEAR(x.scale / sc.x_stretch.scale, 1.0, 0.01);
  EXPECT_NEAR(x.c2, sc.x_stretch.c2, 0.01);
  EXPECT_NEAR(x.c3, sc.x_stretch.c3, 0.01);
  EXPECT_NEAR(x.c4, sc.x_stretch.c4, 0.01);
  EXPECT_NEAR(f.l_stretch.scale / sc.l_stretch.scale, 1.0, 0.01);
  EXPECT_NEAR(f.l_stretch.c2, sc.l_stretch.c2, 0.01);
  EXPECT_TRUE(x.monotone());
  EXPECT_TRUE(f.l_stretch.monotone());
}

TEST(MapFit, ThinConventionUnderestimatesSlabThickness) {
  MapSynthConfig sc = map_truth();
  sc.thin_convention = false;
  sc.exact_root = true;
  const auto f = fit_resonance_map(synth_resonance_map(sc), map_init());
  ASSERT_TRUE(f.fit.converged) << f.fit.status;
  EXPECT_LT(f.fit.value("d"), 88e-9);
  EXPECT_GT(f.fit.value("d"), 70e-9);
}

TEST(MapFit, TransparentMembraneLeavesThicknessUnconstrained) {
  MapSynthConfig sc;
  sc.membrane = MembraneCoeffs::lossless(0.0, kPi / 2);
  sc.exact_root = false;
  sc.x_stretch = {0, 100, 0.5e-6, 2.0};
  sc.l_stretch = {0, 100, 1.5e-6};
  const auto data = synth_resonance_map(sc);
  MapFitConfig fc;
  fc.convention = MembraneConvention::kReflectivity;
  fc.r_init = 0.2;
  fc.x_stretch = sc.x_stretch;
  fc.l_stretch = sc.l_stretch;
  const auto f = fit_resonance_map(data, fc);
  EXPECT_TRUE(f.fit.warnings.has(Warning::kMembraneUnconstrained));
  fc.convention = MembraneConvention::kThin;
  fc.d_init = 80e-9;
  const auto g = fit_resonance_map(data, fc);
  EXPECT_TRUE(g.fit.warnings.has(Warning::kMembraneUnconstrained));
}

TEST(MapFit, RejectsTooFewModes) {
  MapSynthConfig sc = map_truth();
  sc.modes = 2;
  EXPECT_THROW(fit_resonance_map(synth_resonance_map(sc), map_init()), Error);
}

TEST(LossFit, NoiselessRecoveryAndFinesseBound) {
  const auto data = synth_loss_data(loss_truth(), loss_grid(), 0.0, 1);
  const auto f = fit_loss_budget(data, loss_init());
  ASSERT_TRUE(f.fit.converged) << f.fit.status;
  EXPECT_NEAR(f.fit.value("eps") / 0.75, 1.0, 1e-3);
  EXPECT_NEAR(f.fit.value("t1_sq") / 7.5e-3, 1.0, 1e-3);
  EXPECT_NEAR(f.fit.value("S1") / 8e-4, 1.0, 1e-3);
  EXPECT_NEAR(f.fit.value("t2_sq") / 6e-4, 1.0, 1e-3);
  EXPECT_LT(f.fit.chi2, 1e-6);
  EXPECT_NEAR(f.finesse_bound, 2 * kPi / f.fit.value("S1"), 1e-9);
  EXPECT_NEAR(2 * kPi / 8e-4, 7853.98, 0.01);
}

TEST(LossFit, RejectsMissingSigmas) {
  auto data = synth_loss_data(loss_truth(), loss_grid(), 0.01, 1);
  data[3].sigma_kappa = 0.0;
  EXPECT_THROW(fit_loss_budget(data, loss_init()), Error);
}

TEST(TransmissionFit, NoiselessRecovery) {
  const TransmissionSynthConfig ts;
  const auto f = fit_transmission_global(synth_transmission(ts), TransmissionFitConfig{});
  ASSERT_TRUE(f.fit.converged) << f.fit.status;
  EXPECT_EQ(f.l0, 24);
  EXPECT_NEAR(f.fit.value("r1_sq") / 0.9935, 1.0, 1e-3);
  EXPECT_NEAR(f.fit.value("theta0") / 0.18e-3, 1.0, 1e-2);
  EXPECT_NEAR(f.fit.value("A") / 40.0, 1.0, 1e-2);
  EXPECT_TRUE(f.near_ties.empty());
  EXPECT_FALSE(f.fit.warnings.has(Warning::kAmbiguousL0));
  // Unique minimum of the integer scan.
  int minima = 0;
  for (std::size_t i = 0; i < f.chi2_scan.size(); ++i) {
    const double c = f.chi2_scan[i].second;
    const bool left = i == 0 || f.chi2_scan[i - 1].second > c;
    const bool right = i + 1 == f.chi2_scan.size() || f.chi2_scan[i + 1].second > c;
    if (left && right) ++minima;
  }
  EXPECT_EQ(minima, 1);
}

TEST(TransmissionFit, UntiltedSpectraGiveZeroTilt) {
  TransmissionSynthConfig ts;
  ts.theta0 = 0.0;
  ts.a = 0.0;
  TransmissionFitConfig fc;
  fc.theta0_init = 0.05e-3;
  const auto f = fit_transmission_global(synth_transmission(ts), fc);
  EXPECT_EQ(f.l0, 24);
  EXPECT_LT(f.fit.value("theta0"), 1e-6);
  EXPECT_LT(std::abs(f.fit.value("A")), 1.0);
  EXPECT_NEAR(f.fit.value("r1_sq") / 0.9935, 1.0, 1e-3);
}

TEST(TransmissionFit, DroppingBroadSpectraIsStable) {
  TransmissionSynthConfig ts;
  ts.spectra = 20;  // down to l = 5
  ts.relative_noise = 0.01;
  const auto data = synth_transmission(ts);
  TransmissionFitConfig keep;
  keep.min_l = 1;
  TransmissionFitConfig drop;
  drop.min_l = 8;
  const auto a = fit_transmission_global(data, keep);
  const auto b = fit_transmission_global(data, drop);
  EXPECT_EQ(a.l0, b.l0);
  EXPECT_LT(b.ordinals.size(), a.ordinals.size());
  for (const char* name : {"r1_sq", "theta0", "A"}) {
    const double sig = std::hypot(a.fit.uncertainty(name), b.fit.uncertainty(name));
    EXPECT_NEAR(a.fit.value(name), b.fit.value(name), 3 * sig) << name;
  }
}

TEST(TransmissionFit, NarrowScanIsAmbiguousWhenDataCannotDecide) {
  // Low finesse and heavy noise cannot separate neighbouring orders.
  TransmissionSynthConfig ts;
  ts.spectra = 3;
  ts.r1_sq = 0.6;
  ts.relative_noise = 0.3;
  TransmissionFitConfig fc;
  fc.l0_min = 23;
  fc.l0_max = 25;
  fc.r1_sq_init = 0.6;
  const auto f = fit_transmission_global(synth_transmission(ts), fc);
  EXPECT_FALSE(f.near_ties.empty());
  EXPECT_TRUE(f.fit.warnings.has(Warning::kAmbiguousL0));
}

TEST(TransmissionFit, PeakSeparation) {
  const double k = 2 * kPi / 1550e-9;
  const MembraneSpec m = Slab{2.0, 88e-9};
  const double x0 = peak_separation(24, k, kPi, m);
  const MembraneCoeffs c = resolve(m, k);
  EXPECT_NEAR(std::remainder(2 * k * x0 + kPi + c.r_phase, 2 * kPi), 0.0, 1e-9);
  EXPECT_NEAR(peak_separation(25, k, kPi, m) - x0, 1550e-9 / 2, 1e-15);
}
