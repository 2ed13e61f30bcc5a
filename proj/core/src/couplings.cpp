#include "mateoptix/couplings.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "mateoptix/numeric.hpp"

namespace mateoptix {
namespace {

double parity(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }

double period(int branch_n, double length_l) {
  return kPi / empty_mode_k(branch_n, length_l);
}

double reduce(double dx, double p) {
  double r = std::fmod(dx, p);
  if (r < 0) r += p;
  return r;
}

MembraneCoeffs coeffs_at_mode(const MembraneSpec& membrane, int branch_n, double length_l) {
  const MembraneCoeffs c = resolve(membrane, empty_mode_k(branch_n, length_l));
  if (c.r_mag > 1.0) fail(ErrorKind::kInvalidArgument, "|r_m| must not exceed 1");
  return c;
}

bool single_port(const Mirror& m2) { return m2.t_sq() + m2.loss_s == 0.0; }

// Offset of the closed-form resonant wavenumber from k_N.
double closed_form_offset(double dx, int branch_n, const MembraneSpec& membrane,
                          double length_l, Placement placement) {
  const double det = placement == Placement::kMim
                         ? mim_detuning(dx, branch_n, membrane, length_l)
                         : mate_detuning(dx, branch_n, membrane, length_l);
  return det / kSpeedOfLight;
}

// (1/kappa) dkappa/dx for a single-port cavity at a general position x with
// resonant wavenumber k = k_N + offset moving as dk/dx along the branch.
double single_port_log_slope(double x, int branch_n, double offset, double dk_dx,
                             const MembraneCoeffs& c, double length_l) {
  const double rho = c.r_mag;
  const double k = empty_mode_k(branch_n, length_l) + offset;
  const double psi = numeric::mode_phase(branch_n, x, length_l) + 2 * offset * x + c.r_phase;
  const double q = 1 + 2 * rho * std::cos(psi) + rho * rho;
  const double a = 1 - rho * rho;
  const double den = 2 * x * a + 2 * (length_l - x) * q;
  const double dden = 2 * a - 2 * q -
                      8 * (length_l - x) * rho * std::sin(psi) * (k + x * dk_dx);
  return -dden / den;
}

}  // namespace

DispersiveCoupling dispersive_mim(double dx, int branch_n, const MembraneSpec& membrane,
                                  double length_l) {
  const MembraneCoeffs c = coeffs_at_mode(membrane, branch_n, length_l);
  const double k_n = empty_mode_k(branch_n, length_l);
  const double w = fsr(length_l);
  const double rho = c.r_mag;
  const double cs = std::cos(2 * k_n * dx);
  const double sn = std::sin(2 * k_n * dx);
  const double s = 1.0 - rho * rho * cs * cs;
  if (s <= 0.0) fail(ErrorKind::kDivisionByZero, "MIM coupling singular at |r_m| cos = 1");
  const double sign = -parity(branch_n);
  DispersiveCoupling g;
  g.g1 = sign * 2 * w * k_n / kPi * rho * sn / std::sqrt(s);
  g.g2 = sign * 4 * w * k_n * k_n / kPi * rho * (1 - rho * rho) * cs / (s * std::sqrt(s));
  return g;
}

DispersiveCoupling dispersive_mate(double dx, int branch_n, const MembraneSpec& membrane,
                                   double length_l) {
  const MembraneCoeffs c = coeffs_at_mode(membrane, branch_n, length_l);
  const double k_n = empty_mode_k(branch_n, length_l);
  const double w = fsr(length_l);
  const double rho = c.r_mag;
  const double u = 2 * k_n * dx + c.r_phase;
  const double q = rho * rho + 2 * rho * std::cos(u) + 1;
  if (q <= 0.0) fail(ErrorKind::kDivisionByZero, "MATE coupling singular at |r_m| = 1");
  DispersiveCoupling g;
  g.g1 = 2 * k_n / kPi * w * rho * (rho + std::cos(u)) / q;
  g.g2 = -4 * k_n * k_n / kPi * w * rho * (1 - rho * rho) * std::sin(u) / (q * q);
  return g;
}

std::vector<Extremum> extremal_couplings(const MembraneSpec& membrane, double length_l,
                                         int branch_n, CouplingGeometry geometry) {
  const MembraneCoeffs c = coeffs_at_mode(membrane, branch_n, length_l);
  if (c.r_mag >= 1.0) fail(ErrorKind::kInvalidArgument, "extrema require |r_m| < 1");
  const double k_n = empty_mode_k(branch_n, length_l);
  const double p = period(branch_n, length_l);
  std::vector<Extremum> out;
  if (geometry == CouplingGeometry::kMim) {
    for (double dx : {p / 4, 3 * p / 4}) {
      out.push_back({dx, dispersive_mim(dx, branch_n, membrane, length_l).g1,
                     ExtremumKind::kG1Max});
    }
    for (double dx : {0.0, p / 2}) {
      out.push_back({dx, dispersive_mim(dx, branch_n, membrane, length_l).g2,
                     ExtremumKind::kG2Max});
    }
    return out;
  }
  const double rho = c.r_mag;
  const double g1_dx = reduce((kPi - c.r_phase) / (2 * k_n), p);
  out.push_back({g1_dx, dispersive_mate(g1_dx, branch_n, membrane, length_l).g1,
                 ExtremumKind::kG1Max});
  const double inner =
      (6 * rho + std::sqrt(std::pow(rho, 4) + 34 * rho * rho + 1)) / ((1 - rho) * (1 - rho));
  const double shift = 2 * std::atan(std::sqrt(inner));
  std::array<double, 2> locs{reduce((-c.r_phase + shift) / (2 * k_n), p),
                             reduce((-c.r_phase - shift) / (2 * k_n), p)};
  std::sort(locs.begin(), locs.end());
  for (double dx : locs) {
    out.push_back({dx, dispersive_mate(dx, branch_n, membrane, length_l).g2,
                   ExtremumKind::kG2Max});
  }
  return out;
}

std::vector<double> pure_quadratic_points(const MembraneSpec& membrane, int branch_n,
                                          double length_l) {
  const MembraneCoeffs c = coeffs_at_mode(membrane, branch_n, length_l);
  const double k_n = empty_mode_k(branch_n, length_l);
  const double p = period(branch_n, length_l);
  const double a = std::acos(-c.r_mag);
  std::vector<double> out{reduce((a - c.r_phase) / (2 * k_n), p),
                          reduce((-a - c.r_phase) / (2 * k_n), p)};
  std::sort(out.begin(), out.end());
  return out;
}

double membrane_position(double dx, double length_l, Placement placement) {
  switch (placement) {
    case Placement::kMim:
      return length_l / 2 + dx;
    case Placement::kMateInput:
      return dx;
    case Placement::kMateBackstop:
      return length_l - dx;
  }
  return dx;
}

double dissipative_b(double dx, int branch_n, const MembraneSpec& membrane,
                     const Mirror& mirror1, const Mirror& mirror2, double length_l,
                     const MechanicalMode& mode, Placement placement,
                     DerivativeMethod method) {
  const double x_zpf = mode.x_zpf();
  const double x = membrane_position(dx, length_l, placement);
  if (!(x > 0.0 && x < length_l)) {
    fail(ErrorKind::kInvalidArgument, "membrane position outside the cavity");
  }

  if (method == DerivativeMethod::kNumeric) {
    const double h = 2 * kPi / empty_mode_k(branch_n, length_l) / 1e4;
    auto kap = [&](double xx) {
      CavityGeometry g{length_l, xx, branch_n, empty_mode_k(branch_n, length_l)};
      return solve_resonant_k(g, membrane, branch_n, mirror1, mirror2).kappa;
    };
    const double k0 = kap(x);
    if (!(k0 > 0.0)) fail(ErrorKind::kDivisionByZero, "kappa vanishes; B~ undefined");
    return (kap(x + h) - kap(x - h)) / (2 * h) / k0 * x_zpf;
  }

  if (!single_port(mirror2)) {
    fail(ErrorKind::kInvalidArgument,
         "analytic B~ requires a single-port cavity (mirror 2 opaque and lossless)");
  }
  if (mirror1.t_sq() + mirror1.loss_s == 0.0) {
    fail(ErrorKind::kDivisionByZero, "kappa vanishes; B~ undefined");
  }
  const MembraneCoeffs c = coeffs_at_mode(membrane, branch_n, length_l);
  const double rho = c.r_mag;
  switch (placement) {
    case Placement::kMim: {
      const double offset = closed_form_offset(dx, branch_n, membrane, length_l, placement);
      const double k = empty_mode_k(branch_n, length_l) + offset;
      const double dk_dx = dispersive_mim(dx, branch_n, membrane, length_l).g1 / kSpeedOfLight;
      const double psi =
          numeric::mode_phase(branch_n, x, length_l) + 2 * offset * x + c.r_phase;
      const double num =
          rho + std::cos(psi) + (k + x * dk_dx) * length_l * std::sin(psi);
      return 2 * rho / length_l * num / (1 + rho * std::cos(psi)) * x_zpf;
    }
    case Placement::kMateInput: {
      const double k_n = empty_mode_k(branch_n, length_l);
      const double u = 2 * k_n * dx + c.r_phase;
      const double num = rho + std::cos(u) + 2 * k_n * length_l * std::sin(u);
      return 2 * rho / length_l * num / (1 + rho * rho + 2 * rho * std::cos(u)) * x_zpf;
    }
    case Placement::kMateBackstop: {
      // The resonance condition is symmetric under x -> L - x, so the MATE
      // branch applies with dk/dx = -G1 / c.
      const double offset = closed_form_offset(dx, branch_n, membrane, length_l, placement);
      const double dk_dx =
          -dispersive_mate(dx, branch_n, membrane, length_l).g1 / kSpeedOfLight;
      return single_port_log_slope(x, branch_n, offset, dk_dx, c, length_l) * x_zpf;
    }
  }
  return 0.0;
}

std::vector<PurePoint> pure_point_dissipative(const MembraneSpec& membrane,
                                              const MechanicalMode& mode, double length_l,
                                              int branch_n, Placement placement) {
  const MembraneCoeffs c = coeffs_at_mode(membrane, branch_n, length_l);
  if (c.t_mag == 0.0) fail(ErrorKind::kDivisionByZero, "pure-point B~ diverges at |t_m| = 0");
  const double k_n = empty_mode_k(branch_n, length_l);
  const double x_zpf = mode.x_zpf();
  const double ratio = c.r_mag / c.t_mag;
  std::vector<PurePoint> out;
  if (placement == Placement::kMim) {
    // Nodes of cos(2 k_N dx) = +1, where the reflected field interferes
    // destructively on the input side; sign set by (-1)^N.
    out.push_back({0.0, parity(branch_n) * 2 * k_n * x_zpf * ratio});
    return out;
  }
  for (double dx : pure_quadratic_points(membrane, branch_n, length_l)) {
    const double u = numeric::wrap_pi(2 * k_n * dx + c.r_phase);
    const double sign = u >= 0 ? 1.0 : -1.0;
    const double b = placement == Placement::kMateInput
                         ? sign * 4 * k_n * x_zpf * ratio
                         : sign * 4 * k_n * x_zpf * (dx / length_l) * ratio;
    out.push_back({dx, b});
  }
  return out;
}

StrongParameters strong_parameters(double g1, double g2, double kappa_value, double x_zpf) {
  if (kappa_value == 0.0) {
    fail(ErrorKind::kDivisionByZero, "strong-coupling parameters undefined at kappa = 0");
  }
  return {-g1 * x_zpf / kappa_value, -g2 * x_zpf * x_zpf / kappa_value};
}

CouplingReport coupling_report(double dx, int branch_n, const MembraneSpec& membrane,
                               const Mirror& mirror1, const Mirror& mirror2,
                               double length_l, const MechanicalMode& mode,
                               Placement placement, DerivativeMethod method) {
  CouplingReport r;
  r.dx = dx;
  DispersiveCoupling g;
  if (placement == Placement::kMim) {
    g = dispersive_mim(dx, branch_n, membrane, length_l);
  } else {
    g = dispersive_mate(dx, branch_n, membrane, length_l);
    // Couplings are derivatives with respect to the position from mirror 1.
    if (placement == Placement::kMateBackstop) g.g1 = -g.g1;
  }
  r.g1 = g.g1;
  r.g2 = g.g2;
  const double x = membrane_position(dx, length_l, placement);
  const double offset = closed_form_offset(dx, branch_n, membrane, length_l, placement);
  const auto kap =
      kappa_on_branch(x, branch_n, offset, membrane, mirror1, mirror2, length_l);
  r.kappa = kap.value;
  r.warnings = kap.warnings | closed_form_validity(dx, branch_n, membrane, length_l, placement);
  r.b_tilde = dissipative_b(dx, branch_n, membrane, mirror1, mirror2, length_l, mode,
                            placement, method);
  const auto sp = strong_parameters(r.g1, r.g2, r.kappa, mode.x_zpf());
  r.a1_tilde = sp.a1_tilde;
  r.a2_tilde = sp.a2_tilde;
  return r;
}

EnhancementRatios enhancement_limits(double t_mag) {
  const double s3 = std::sqrt(3.0);
  return {2.0 / (t_mag * t_mag), 9.0 / (2.0 * s3) / std::pow(t_mag, 3),
          8.0 / (3.0 * s3) / t_mag, 4.0 / (3.0 * s3 * t_mag)};
}

double a1_max_limit(int branch_n, double length_l, double x_zpf, double t1_sq,
                    double t_mag) {
  return -8.0 * empty_mode_k(branch_n, length_l) * x_zpf / (t1_sq * t_mag * t_mag);
}

namespace {

// Max of |f| over one period: dense grid, then Brent on the best cell.
double periodic_abs_max(const std::function<double(double)>& f, double start, double p,
                        int n) {
  const double h = p / n;
  int best = 0;
  double best_v = -1.0;
  for (int i = 0; i < n; ++i) {
    const double v = std::abs(f(start + i * h));
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  const double a = std::max(start + (best - 1) * h, start * 1e-3);
  const double b = start + (best + 1) * h;
  const auto [arg, neg] = numeric::minimize([&](double d) { return -std::abs(f(d)); }, a,
                                            b, 52);
  (void)arg;
  return std::max(best_v, -neg);
}

}  // namespace

MeasuredMaxima measure_maxima(const MembraneSpec& membrane, const Mirror& mirror1,
                              double length_l, int branch_n, const MechanicalMode& mode,
                              int grid_points) {
  const MembraneCoeffs c = coeffs_at_mode(membrane, branch_n, length_l);
  const double t_sq = std::max(c.t_mag * c.t_mag, 1e-12);
  int n = grid_points;
  if (n <= 0) {
    n = static_cast<int>(std::clamp(20.0 * 2 * kPi / t_sq, 2e4, 4e6));
  }
  const double p = period(branch_n, length_l);
  const double x_zpf = mode.x_zpf();
  const Mirror opaque{};

  auto kap = [&](double dx, Placement pl) {
    const double x = membrane_position(dx, length_l, pl);
    const double off = closed_form_offset(dx, branch_n, membrane, length_l, pl);
    return kappa_on_branch(x, branch_n, off, membrane, mirror1, opaque, length_l).value;
  };
  auto b = [&](double dx, Placement pl) {
    return dissipative_b(dx, branch_n, membrane, mirror1, opaque, length_l, mode, pl,
                         DerivativeMethod::kAnalytic);
  };

  MeasuredMaxima m;
  // MIM about the center; MATE over the first period next to mirror 1, where
  // 4 dx / L << |t_m|^2 holds best.
  const double mim0 = 0.0;
  const double mate0 = 0.5 * p / n;
  auto mim_g = [&](double d) { return dispersive_mim(d, branch_n, membrane, length_l); };
  auto mate_g = [&](double d) { return dispersive_mate(d, branch_n, membrane, length_l); };

  m.mim.g1 = periodic_abs_max([&](double d) { return mim_g(d).g1; }, mim0, p, n);
  m.mim.g2 = periodic_abs_max([&](double d) { return mim_g(d).g2; }, mim0, p, n);
  m.mim.b_tilde = periodic_abs_max([&](double d) { return b(d, Placement::kMim); }, mim0, p, n);
  m.mim.a2_tilde = periodic_abs_max(
      [&](double d) { return mim_g(d).g2 * x_zpf * x_zpf / kap(d, Placement::kMim); }, mim0,
      p, n);
  m.a1_mim = periodic_abs_max(
      [&](double d) { return mim_g(d).g1 * x_zpf / kap(d, Placement::kMim); }, mim0, p, n);

  m.mate.g1 = periodic_abs_max([&](double d) { return mate_g(d).g1; }, mate0, p, n);
  m.mate.g2 = periodic_abs_max([&](double d) { return mate_g(d).g2; }, mate0, p, n);
  m.mate.b_tilde =
      periodic_abs_max([&](double d) { return b(d, Placement::kMateInput); }, mate0, p, n);
  m.mate.a2_tilde = periodic_abs_max(
      [&](double d) {
        return mate_g(d).g2 * x_zpf * x_zpf / kap(d, Placement::kMateInput);
      },
      mate0, p, n);
  m.a1_mate = periodic_abs_max(
      [&](double d) { return mate_g(d).g1 * x_zpf / kap(d, Placement::kMateInput); }, mate0,
      p, n);

  m.ratios = {m.mate.g1 / m.mim.g1, m.mate.g2 / m.mim.g2, m.mate.b_tilde / m.mim.b_tilde,
              m.mate.a2_tilde / m.mim.a2_tilde};
  return m;
}

}  // namespace mateoptix
