// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance --only N   run criterion N
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mateoptix/couplings.hpp"
#include "mateoptix/pipelines.hpp"
#include "mateoptix/resonance.hpp"
#include "mateoptix/spectra.hpp"
#include "mateoptix/tilt.hpp"

using namespace mateoptix;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

constexpr double kLambda = 1550e-9;

MembraneSpec with_t(double t_mag, double phase) {
  return MembraneCoeffs::lossless(std::sqrt(1 - t_mag * t_mag), phase);
}

// ------------------------------------------------------------------ 1

Outcome oracle_equivalence() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int draws = 10000;
  int fail_mate = 0, fail_mim = 0, flagged = 0;
  double worst_mate = 0, worst_mim = 0;
  for (int i = 0; i < draws; ++i) {
    const double length = 0.01 + 0.19 * u(rng);
    const double rho = 0.99 * u(rng);
    const double phase = 2 * kPi * u(rng);
    const double dx = 10 * kLambda * u(rng);
    const int n = nearest_mode_index(kLambda, length);
    const MembraneSpec m = MembraneCoeffs::lossless(rho, phase);
    const double w = fsr(length);

    CavityGeometry g{length, dx, n, empty_mode_k(n, length)};
    double e = std::abs(omega_mate(dx, n, m, length) - solve_resonant_k(g, m, n).omega) / w;
    worst_mate = std::max(worst_mate, e);
    if (e >= 1e-3) {
      ++fail_mate;
      if (!closed_form_validity(dx, n, m, length, Placement::kMateInput).empty()) ++flagged;
    }
    g.membrane_x = length / 2 + dx;
    e = std::abs(omega_mim(dx, n, m, length) - solve_resonant_k(g, m, n).omega) / w;
    worst_mim = std::max(worst_mim, e);
    if (e >= 1e-3) {
      ++fail_mim;
      if (!closed_form_validity(dx, n, m, length, Placement::kMim).empty()) ++flagged;
    }
  }
  Outcome o;
  o.pass = fail_mate == 0 && fail_mim == 0;
  o.detail = std::to_string(draws) + " draws; failures MATE " + std::to_string(fail_mate) +
             " MIM " + std::to_string(fail_mim) + " (" + std::to_string(flagged) +
             " carry validity flags); worst " + fmt("%.3g", worst_mate) + " / " +
             fmt("%.3g", worst_mim) + " FSR";
  return o;
}

// ------------------------------------------------------------------ 2

Outcome linewidth_cross_check() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int accepted = 0, failures = 0;
  double worst = 0;
  while (accepted < 1000) {
    CavityModel q;
    q.length_l = 0.01 + 0.2 * u(rng);
    q.mirror1 = Mirror::from_power_transmission(1e-4 + 3e-3 * u(rng), 1e-3 * u(rng));
    q.mirror2 = Mirror::from_power_transmission(3e-3 * u(rng));
    q.membrane = MembraneCoeffs::lossless(0.9 * u(rng), 2 * kPi * u(rng));
    const double x = q.length_l * (0.001 + 0.998 * u(rng));
    CavityGeometry g;
    g.length_l = q.length_l;
    g.membrane_x = x;
    g.mode_index_n = q.mode_index();
    const auto s = solve_resonant_k(g, q.membrane, g.mode_index_n, q.mirror1, q.mirror2);
    const double k_eq = kappa_on_branch(x, g.mode_index_n, s.offset_k, q.membrane, q.mirror1,
                                        q.mirror2, q.length_l)
                            .value;
    if (fsr(q.length_l) / k_eq <= 500) continue;
    ++accepted;
    const double fwhm = position_sweep(q, {x})[0].kappa;
    const double e = std::abs(fwhm / k_eq - 1);
    worst = std::max(worst, e);
    if (e >= 0.01) ++failures;
  }
  return {failures == 0, std::to_string(accepted) + " samples with finesse > 500; worst " +
                             fmt("%.3g", 100 * worst) + "% ; over 1%: " +
                             std::to_string(failures)};
}

// ------------------------------------------------------------------ 3

// Five-point first and second derivatives.
std::pair<double, double> derivatives(const std::function<double(double)>& f, double x,
                                      double h) {
  const double fm2 = f(x - 2 * h), fm1 = f(x - h), f0 = f(x), fp1 = f(x + h), fp2 = f(x + 2 * h);
  const double d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
  const double d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
  return {d1, d2};
}

Outcome gradient_checks() {
  const double length = 0.1;
  const int n = nearest_mode_index(kLambda, length);
  const double kn = empty_mode_k(n, length);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst1 = 0, worst2 = 0;
  for (int geo = 0; geo < 2; ++geo) {
    for (int i = 0; i < 300; ++i) {
      const double rho = 0.05 + 0.9 * u(rng);
      const MembraneSpec m = MembraneCoeffs::lossless(rho, 2 * kPi * u(rng));
      const double dx = (geo ? 2e-6 : 0.0) + kPi / kn * u(rng);
      // omega - N omega_FSR keeps the differences clear of cancellation.
      const auto omega = [&](double d) {
        return geo ? mate_detuning(d, n, m, length) : mim_detuning(d, n, m, length);
      };
      const auto g = geo ? dispersive_mate(dx, n, m, length) : dispersive_mim(dx, n, m, length);
      // Step well inside the narrowest feature, of width (1 - rho) / 2k.
      const auto [d1, d2] = derivatives(omega, dx, 1e-3 * (1 - rho) / (2 * kn));
      // Relative to the local value, floored at 1e-3 of the period maximum.
      double peak1 = 0, peak2 = 0;
      for (const auto& e : extremal_couplings(m, length, n,
                                              geo ? CouplingGeometry::kMate
                                                  : CouplingGeometry::kMim)) {
        (e.kind == ExtremumKind::kG1Max ? peak1 : peak2) =
            std::max(e.kind == ExtremumKind::kG1Max ? peak1 : peak2, std::abs(e.value));
      }
      worst1 = std::max(worst1, std::abs(g.g1 - d1) / std::max(std::abs(g.g1), 1e-3 * peak1));
      worst2 = std::max(worst2, std::abs(g.g2 - d2) / std::max(std::abs(g.g2), 1e-3 * peak2));
    }
  }
  const MembraneSpec m = with_t(0.3, kPi);
  const Mirror m1 = Mirror::from_power_transmission(6e-3);
  const MechanicalMode mode{1e-12, 2 * kPi * 1e6};
  double worst_b = 0;
  for (int i = 1; i < 20; ++i) {
    const double dx = kPi / kn * i / 20;
    const double a = dissipative_b(dx, n, m, m1, Mirror{}, length, mode, Placement::kMim,
                                   DerivativeMethod::kAnalytic);
    const double b = dissipative_b(dx, n, m, m1, Mirror{}, length, mode, Placement::kMim,
                                   DerivativeMethod::kNumeric);
    if (std::abs(a) > 1e-3 * 2 * kn * mode.x_zpf()) worst_b = std::max(worst_b, std::abs(b / a - 1));
  }
  return {worst1 < 1e-5 && worst2 < 1e-4 && worst_b < 0.01,
          "G1 " + fmt("%.2e", worst1) + ", G2 " + fmt("%.2e", worst2) + " (600 points); B~ " +
              fmt("%.2e", worst_b) + " at |t_m| = 0.3"};
}

// ------------------------------------------------------------------ 4

Outcome limit_ratios() {
  const double length = 0.1;
  const int n = nearest_mode_index(kLambda, length);
  const double t = 0.01;
  const MembraneSpec m = with_t(t, kPi - 0.01);
  const Mirror m1 = Mirror::from_power_transmission(1e-3);
  const MechanicalMode mode{1e-10, 2 * kPi * 4e5};
  const auto got = measure_maxima(m, m1, length, n, mode);
  const auto lim = enhancement_limits(t);
  const double e_g1 = std::abs(got.ratios.g1 / lim.g1 - 1);
  const double e_g2 = std::abs(got.ratios.g2 / lim.g2 - 1);
  const double e_b = std::abs(got.ratios.b_tilde / lim.b_tilde - 1);
  const double e_a2 = std::abs(got.ratios.a2_tilde / lim.a2_tilde - 1);

  const auto mim = pure_point_dissipative(m, mode, length, n, Placement::kMim);
  const auto in = pure_point_dissipative(m, mode, length, n, Placement::kMateInput);
  const auto back = pure_point_dissipative(m, mode, length, n, Placement::kMateBackstop);
  double e_pure = 0, e_back = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    e_pure = std::max(e_pure, std::abs(std::abs(in[i].b_tilde / mim[0].b_tilde) - 2.0));
    const double factor = std::abs(back[i].b_tilde / mim[0].b_tilde);
    const double expect = 2 * back[i].dx / length;
    e_back = std::max(e_back, std::abs(factor / expect - 1));
  }
  const bool ok = e_g1 < 0.02 && e_g2 < 0.02 && e_b < 0.02 && e_a2 < 0.02 && !in.empty() &&
                  in.size() == back.size() && e_pure < 1e-10 && e_back < 1e-6;
  return {ok, "G1 " + fmt("%.2f%%", 100 * e_g1) + ", G2 " + fmt("%.2f%%", 100 * e_g2) +
                  ", B~ " + fmt("%.2f%%", 100 * e_b) + ", A2~ " + fmt("%.2f%%", 100 * e_a2) +
                  "; pure-point ratio off by " + fmt("%.1e", e_pure) + "; backstop factor " +
                  fmt("%.1e", e_back)};
}

// ------------------------------------------------------------------ 5

Outcome tilt_expansion() {
  const double k = 2 * kPi / kLambda;
  TiltedCavity c;
  c.x0 = 5e-6;
  c.sigma = 100e-6;
  c.mirror1 = Mirror::from_power_transmission(1 - 0.9935);
  c.membrane = Slab{2.0, 88e-9};
  double worst = 0;
  for (double x0 : {4.9e-6, 5e-6, 5.05e-6}) {
    c.x0 = x0;
    c.theta = 0.05 / (k * c.sigma);
    const double a = tilted_transmission_analytic(c, k).value;
    const double q = tilted_transmission_quadrature(c, k, 1e-13);
    worst = std::max(worst, std::abs(a / q - 1));
  }
  c.x0 = 5e-6;
  std::vector<double> lx, ly;
  for (int i = 0; i <= 8; ++i) {
    const double kts = std::pow(10.0, -3.0 + 2.0 * i / 8);
    c.theta = kts / (k * c.sigma);
    const double a = tilted_transmission_analytic(c, k).value;
    const double q = tilted_transmission_quadrature(c, k, 1e-12);
    lx.push_back(std::log(kts));
    ly.push_back(std::log(std::abs(a / q - 1)));
  }
  const double nn = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  return {worst < 1e-4 && std::abs(slope - 4) <= 0.3,
          "relative error " + fmt("%.2e", worst) + " at k theta sigma = 0.05; slope " +
              fmt("%.3f", slope) + " over [1e-3, 1e-1]"};
}

// ------------------------------------------------------------------ 6

Outcome loss_fixture() {
  CavityModel truth;
  truth.length_l = 0.1;
  truth.mirror1 = Mirror::from_power_transmission(7.5e-3, 8e-4);
  truth.mirror2 = Mirror::from_power_transmission(6e-4);
  truth.membrane = Slab{2.0, 88e-9};
  truth.mode_match_eps = 0.75;
  std::vector<double> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(20e-6 + i * 1.55e-6 / 40);
  LossFitConfig lc;
  lc.model = truth;
  lc.model.mode_match_eps = 0.6;
  lc.model.mirror1 = Mirror::from_power_transmission(5e-3, 5e-4);
  lc.model.mirror2 = Mirror::from_power_transmission(1e-3);

  const char* names[] = {"eps", "t1_sq", "S1", "t2_sq"};
  const double values[] = {0.75, 7.5e-3, 8e-4, 6e-4};
  // Monte-Carlo spread of the estimator.
  const int trials = 30;
  std::vector<std::vector<double>> est(4);
  for (int s = 0; s < trials; ++s) {
    const auto f = fit_loss_budget(synth_loss_data(truth, xs, 0.01, 100 + s), lc);
    if (!f.fit.converged) return {false, "Monte-Carlo fit did not converge: " + f.fit.status};
    for (int j = 0; j < 4; ++j) est[j].push_back(f.fit.value(names[j]));
  }
  const auto f = fit_loss_budget(synth_loss_data(truth, xs, 0.01, 1), lc);
  if (!f.fit.converged) return {false, "fit did not converge: " + f.fit.status};
  bool ok = true;
  std::string detail;
  double sigma_s1 = 0;
  for (int j = 0; j < 4; ++j) {
    double mean = 0, var = 0;
    for (double v : est[j]) mean += v / trials;
    for (double v : est[j]) var += (v - mean) * (v - mean) / (trials - 1);
    const double sd = std::sqrt(var);
    if (j == 2) sigma_s1 = sd;
    const double z = (f.fit.value(names[j]) - values[j]) / sd;
    ok = ok && std::abs(z) < 3;
    detail += std::string(names[j]) + " " + fmt("%+.2f", z) + " sd; ";
  }
  const double bound = f.finesse_bound;
  const double expect = 2 * kPi / 8e-4;
  ok = ok && std::abs(bound - 2 * kPi / f.fit.value("S1")) < 1e-9 * bound &&
       std::abs(bound / expect - 1) < 3 * sigma_s1 / 8e-4;
  return {ok, detail + "finesse bound " + fmt("%.4g", bound)};
}

// ------------------------------------------------------------------ 7

Outcome tilt_fixture() {
  TransmissionSynthConfig ts;
  const auto clean = fit_transmission_global(synth_transmission(ts), TransmissionFitConfig{});
  bool ok = clean.fit.converged && clean.l0 == 24;
  double worst = 0;
  const std::pair<const char*, double> truth[] = {
      {"r1_sq", ts.r1_sq}, {"theta0", ts.theta0}, {"A", ts.a}};
  for (const auto& [name, v] : truth) worst = std::max(worst, std::abs(clean.fit.value(name) / v - 1));
  ok = ok && worst < 0.01;

  ts.relative_noise = 0.01;
  const auto noisy = fit_transmission_global(synth_transmission(ts), TransmissionFitConfig{});
  ok = ok && noisy.fit.converged && noisy.l0 == 24;
  std::string z;
  for (const auto& [name, v] : truth) {
    const double zz = (noisy.fit.value(name) - v) / noisy.fit.uncertainty(name);
    ok = ok && std::abs(zz) < 3;
    z += std::string(" ") + name + " " + fmt("%+.2f", zz);
  }
  return {ok, "noiseless l0 " + std::to_string(clean.l0) + ", worst " +
                  fmt("%.2e", worst) + "; 1% noise l0 " + std::to_string(noisy.l0) +
                  ", deviations in reported sigma:" + z};
}

// ------------------------------------------------------------------ 8

Outcome thickness_underestimate() {
  MapSynthConfig sc;
  sc.x_stretch = {0, 100, 0.5e-6, 2.0, 0.03, -0.02, 0.01};
  sc.l_stretch = {0, 100, 1.5e-6, 0.0, 0.02, 0.01, -0.01};
  sc.thin_convention = false;
  sc.exact_root = true;
  MapFitConfig fc;
  fc.convention = MembraneConvention::kThin;
  fc.d_init = 80e-9;
  fc.x_stretch = {0, 100, 0.5e-6, 2.0, 0, 0, 0};
  fc.l_stretch = {0, 100, 1.5e-6, 0, 0, 0, 0};
  const auto f = fit_resonance_map(synth_resonance_map(sc), fc);
  const double d = f.fit.value("d");
  return {f.fit.converged && d < 88e-9,
          "thin-convention d = " + fmt("%.2f", d * 1e9) + " nm from an 88 nm slab"};
}

// ------------------------------------------------------------------ 9

Outcome flexure() {
  const double a = flexure_sagitta(80.0, 11e-3);
  const double b = flexure_sagitta(3.0, 11e-3);
  return {a >= 0.7e-6 && a <= 0.8e-6 && b > 15e-6,
          "sagitta(80 m) " + fmt("%.4g", a * 1e6) + " um, sagitta(3 m) " +
              fmt("%.4g", b * 1e6) + " um"};
}

// ------------------------------------------------------------------ 10

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  const std::string cli = MATEOPTIX_CLI;
  const fs::path ex = MATEOPTIX_FIXTURES;
  const fs::path root = fs::temp_directory_path() / "mateoptix_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::string> runs = {
      "synth loss --seed 42 --config " + (ex / "loss_synth.toml").string(),
      "synth map --seed 42 --config " + (ex / "map_synth.toml").string() +
          " --set synth_map.noise=6e6",
      "synth transmission --seed 42 --config " + (ex / "transmission_synth.toml").string(),
      "fit loss --config " + (ex / "loss.toml").string(),
      "fit transmission --config " + (ex / "transmission.toml").string() +
          " --set transmission_fit.l0_min=23 --set transmission_fit.l0_max=25",
      "spectrum --threads 2 --config " + (ex / "spectrum.toml").string() +
          " --set spectrum.x_points=9",
      "couplings --config " + (ex / "couplings.toml").string(),
  };
  int files = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
      dirs.push_back(root / ("run" + std::to_string(i) + "_" + std::to_string(rep)));
      const std::string cmd =
          "'" + cli + "' " + runs[i] + " --out '" + dirs.back().string() + "' >/dev/null 2>&1";
      if (shell(cmd) != 0) return {false, "command failed: " + runs[i]};
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const fs::path other = dirs[1] / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        return {false, "outputs differ: " + runs[i] + " -> " + entry.path().filename().string()};
      }
      ++files;
    }
  }
  fs::remove_all(root);
  return {true, std::to_string(runs.size()) + " commands run twice, " + std::to_string(files) +
                    " output files byte-identical"};
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"oracle equivalence of closed-form resonances", oracle_equivalence},
    {"decay-rate formula vs transfer-matrix linewidth", linewidth_cross_check},
    {"coupling gradients vs finite differences", gradient_checks},
    {"small-transmission enhancement limits", limit_ratios},
    {"tilt expansion vs quadrature", tilt_expansion},
    {"loss-budget fixture", loss_fixture},
    {"tilt-fit fixture", tilt_fixture},
    {"thin-membrane thickness underestimate", thickness_underestimate},
    {"flexure sagitta", flexure},
    {"CLI determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N]\n");
      return 2;
    }
  }
  const int count = static_cast<int>(std::size(kCriteria));
  if (only < 0 || only > count) {
    std::fprintf(stderr, "criterion must be between 1 and %d\n", count);
    return 2;
  }
  int failed = 0;
  for (int i = 1; i <= count; ++i) {
    if (only && i != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = kCriteria[i - 1].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s; %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i,
                kCriteria[i - 1].name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed ? 1 : 0;
}
