#include "mateoptix/resonance.hpp"

#include <cmath>
#include <sstream>

#include "mateoptix/numeric.hpp"

namespace mateoptix {
namespace {

double parity(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }

void require_partial_reflector(const MembraneCoeffs& c) {
  if (c.r_mag >= 1.0) {
    fail(ErrorKind::kDivisionByZero, "membrane with |r_m| = 1 decouples the sub-cavities");
  }
}

double wavelength_of(double k) { return 2.0 * kPi / k; }

}  // namespace

double reflection_lag(double r_mag, double u) {
  return std::atan2(r_mag * std::sin(u), 1.0 + r_mag * std::cos(u));
}

double resonance_phase(double offset, int branch_n, double length_l, double x,
                       const MembraneCoeffs& membrane) {
  const double u = numeric::mode_phase(branch_n, x, length_l) + 2.0 * offset * x +
                   membrane.r_phase;
  return offset * length_l + membrane.r_phase - reflection_lag(membrane.r_mag, u) -
         kPi / 2;
}

double general_residual(double offset, int branch_n, double length_l, double x,
                        const MembraneCoeffs& membrane) {
  const Complex r = membrane.r();
  const Complex t = membrane.t();
  const double sign = parity(branch_n);
  const Complex e_plus = sign * std::polar(1.0, offset * length_l);
  const Complex e_minus = sign * std::polar(1.0, -offset * length_l);
  const double cross =
      sign * std::cos(numeric::mode_phase(branch_n, x, length_l) +
                      offset * (2.0 * x - length_l));
  const Complex lhs = (t * t - r * r) * e_plus - e_minus;
  return std::abs(lhs - 2.0 * r * cross) / 2.0;
}

int resonance_branch(double k, double length_l, double x, const MembraneSpec& membrane) {
  const MembraneCoeffs c = resolve(membrane, k);
  const double phi = k * length_l + c.r_phase - reflection_lag(c.r_mag, 2 * k * x + c.r_phase);
  return static_cast<int>(std::lround((phi - kPi / 2) / kPi));
}

namespace {

ResonanceSolution finish(const CavityGeometry& g, const MembraneSpec& membrane,
                         int branch_n, double offset, const Mirror& m1, const Mirror& m2) {
  const double k_n = empty_mode_k(branch_n, g.length_l);
  const double k = k_n + offset;
  const MembraneCoeffs c = resolve(membrane, k);

  ResonanceSolution s;
  s.wavenumber_k = k;
  s.offset_k = offset;
  s.omega = kSpeedOfLight * k;
  s.branch_n = branch_n;
  s.residual = general_residual(offset, branch_n, g.length_l, g.membrane_x, c);
  if (!(s.residual < 1e-10)) {
    std::ostringstream os;
    os << "resonance residual " << s.residual << " above 1e-10";
    fail(ErrorKind::kNumerical, os.str());
  }
  const auto kap = kappa_on_branch(g.membrane_x, branch_n, offset, membrane, m1, m2,
                                   g.length_l);
  s.kappa = kap.value;
  s.warnings = kap.warnings;
  if (g.length_l < 100.0 * wavelength_of(k)) s.warnings |= Warning::kShortCavity;
  return s;
}

void check_inputs(const CavityGeometry& g, int branch_n) {
  if (!(g.length_l > 0.0) || !(g.membrane_x > 0.0) || !(g.membrane_x < g.length_l)) {
    fail(ErrorKind::kInvalidArgument, "resonance requires 0 < x < L");
  }
  if (branch_n < 1) fail(ErrorKind::kInvalidArgument, "branch index must be >= 1");
}

double phase_at(double offset, int branch_n, const CavityGeometry& g,
                const MembraneSpec& membrane) {
  const MembraneCoeffs c = resolve(membrane, empty_mode_k(branch_n, g.length_l) + offset);
  require_partial_reflector(c);
  return resonance_phase(offset, branch_n, g.length_l, g.membrane_x, c);
}

}  // namespace

ResonanceSolution solve_resonant_k(const CavityGeometry& geometry,
                                   const MembraneSpec& membrane, int branch_n,
                                   const Mirror& mirror1, const Mirror& mirror2) {
  check_inputs(geometry, branch_n);
  const double length_l = geometry.length_l;
  const MembraneCoeffs c0 = resolve(membrane, empty_mode_k(branch_n, length_l));
  require_partial_reflector(c0);

  auto f = [&](double offset) { return phase_at(offset, branch_n, geometry, membrane); };
  // The lag is bounded by asin|r_m| < pi/2, so one FSR window always brackets
  // the root; dispersive slabs get a small margin.
  const double margin = std::holds_alternative<Slab>(membrane) ? 0.05 : 1e-9;
  const double lo = (-c0.r_phase - margin) / length_l;
  const double hi = (kPi - c0.r_phase + margin) / length_l;
  const double offset = numeric::find_root(f, lo, hi);
  return finish(geometry, membrane, branch_n, offset, mirror1, mirror2);
}

ResonanceSolution solve_resonant_k_seeded(const CavityGeometry& geometry,
                                          const MembraneSpec& membrane, int branch_n,
                                          double seed_offset, const Mirror& mirror1,
                                          const Mirror& mirror2) {
  check_inputs(geometry, branch_n);
  auto f = [&](double offset) { return phase_at(offset, branch_n, geometry, membrane); };
  const double w = kPi / (16.0 * geometry.length_l);
  const double a = seed_offset - w;
  const double b = seed_offset + w;
  const double fa = f(a);
  const double fb = f(b);
  if ((fa < 0) != (fb < 0)) {
    const double offset = numeric::find_root(f, a, b);
    return finish(geometry, membrane, branch_n, offset, mirror1, mirror2);
  }
  return solve_resonant_k(geometry, membrane, branch_n, mirror1, mirror2);
}

double resonant_length(double k, double x, const MembraneSpec& membrane, int branch) {
  if (!(k > 0.0)) fail(ErrorKind::kInvalidArgument, "resonant_length requires k > 0");
  const MembraneCoeffs c = resolve(membrane, k);
  const double num = std::cos(c.r_phase) + c.r_mag * std::cos(2 * k * x);
  const double den = std::sin(c.r_phase) - c.r_mag * std::sin(2 * k * x);
  if (std::abs(num) < 1e-15 && std::abs(den) < 1e-15) {
    fail(ErrorKind::kDegenerateConfiguration,
         "resonant length undefined: numerator and denominator vanish");
  }
  double theta = std::atan(num / den);
  if (den == 0.0) theta = kPi / 2;
  if (theta < 0) theta += kPi;
  // Smallest integer m with (theta + m pi) / k > x.
  double m = std::floor((k * x - theta) / kPi) + 1.0;
  if (m < 0) m = 0;
  double length_l = (theta + m * kPi) / k;
  if (length_l <= x) length_l += kPi / k;
  return length_l + branch * kPi / k;
}

double mim_detuning(double dx, int branch_n, const MembraneSpec& membrane,
                    double length_l) {
  const double k_n = empty_mode_k(branch_n, length_l);
  const MembraneCoeffs c = resolve(membrane, k_n);
  if (c.r_mag > 1.0) fail(ErrorKind::kInvalidArgument, "|r_m| must not exceed 1");
  const double arg = -parity(branch_n) * c.r_mag * std::cos(2 * k_n * dx);
  return fsr(length_l) / kPi * (std::acos(arg) - c.r_phase);
}

double mate_detuning(double dx, int branch_n, const MembraneSpec& membrane,
                     double length_l) {
  const double k_n = empty_mode_k(branch_n, length_l);
  const MembraneCoeffs c = resolve(membrane, k_n);
  if (c.r_mag > 1.0) fail(ErrorKind::kInvalidArgument, "|r_m| must not exceed 1");
  // Continuous unwrapping of the arctan: pi/2 - phi_r + lag(2 k_N dx + phi_r).
  const double u = 2 * k_n * dx + c.r_phase;
  return fsr(length_l) / kPi * (kPi / 2 - c.r_phase + reflection_lag(c.r_mag, u));
}

double omega_mim(double dx, int branch_n, const MembraneSpec& membrane, double length_l) {
  return branch_n * fsr(length_l) + mim_detuning(dx, branch_n, membrane, length_l);
}

double omega_mate(double dx, int branch_n, const MembraneSpec& membrane,
                  double length_l) {
  return branch_n * fsr(length_l) + mate_detuning(dx, branch_n, membrane, length_l);
}

Warnings closed_form_validity(double dx, int branch_n, const MembraneSpec& membrane,
                              double length_l, Placement placement) {
  Warnings w;
  const double k_n = empty_mode_k(branch_n, length_l);
  if (length_l < 100.0 * wavelength_of(k_n)) w |= Warning::kShortCavity;
  if (placement == Placement::kMim) {
    if (std::abs(dx) > length_l / 20) w |= Warning::kOutsideMimRange;
  } else {
    const MembraneCoeffs c = resolve(membrane, k_n);
    const double t_sq = c.t_mag * c.t_mag;
    if (std::abs(dx) > length_l / 20 || 4 * std::abs(dx) / length_l >= t_sq / 10) {
      w |= Warning::kOutsideMateRange;
    }
  }
  return w;
}

Flagged<double> kappa_on_branch(double x, int branch_n, double offset,
                                const MembraneSpec& membrane, const Mirror& mirror1,
                                const Mirror& mirror2, double length_l) {
  const MembraneCoeffs c = resolve(membrane, empty_mode_k(branch_n, length_l) + offset);
  const double p1 = mirror1.t_sq() + mirror1.loss_s;
  const double p2 = mirror2.t_sq() + mirror2.loss_s;
  if (p1 == 0.0 && p2 == 0.0) return {0.0, Warning::kLosslessCavity};
  const double rho = c.r_mag;
  const double psi =
      numeric::mode_phase(branch_n, x, length_l) + 2.0 * offset * x + c.r_phase;
  const double q = 1.0 + 2.0 * rho * std::cos(psi) + rho * rho;
  const double a = 1.0 - rho * rho;
  const double den = 2.0 * x * a + 2.0 * (length_l - x) * q;
  if (!(den > 0.0)) fail(ErrorKind::kDivisionByZero, "decay rate denominator vanishes");
  return {kSpeedOfLight * (a * p1 + q * p2) / den, {}};
}

Flagged<double> kappa(double x, double k, const MembraneSpec& membrane,
                      const Mirror& mirror1, const Mirror& mirror2, double length_l) {
  if (!(k > 0.0) || !(length_l > 0.0)) {
    fail(ErrorKind::kInvalidArgument, "kappa requires k > 0 and L > 0");
  }
  const int n = static_cast<int>(std::lround(k * length_l / kPi));
  const double offset = k - empty_mode_k(n, length_l);
  return kappa_on_branch(x, n, offset, membrane, mirror1, mirror2, length_l);
}

double subcavity_power_ratio(double x, double k, const MembraneSpec& membrane) {
  const MembraneCoeffs c = resolve(membrane, k);
  const double rho = c.r_mag;
  if (rho >= 1.0) fail(ErrorKind::kDivisionByZero, "power ratio diverges at |r_m| = 1");
  return (1.0 + rho * rho + 2.0 * rho * std::cos(2 * k * x + c.r_phase)) /
         (1.0 - rho * rho);
}

std::vector<ResonanceSolution> trace_branch(const std::vector<double>& x_grid, int branch_n,
                                            const MembraneSpec& membrane,
                                            const Mirror& mirror1, const Mirror& mirror2,
                                            double length_l) {
  std::vector<ResonanceSolution> out;
  out.reserve(x_grid.size());
  const double w_fsr = fsr(length_l);
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    if (i > 0 && !(x_grid[i] > x_grid[i - 1])) {
      fail(ErrorKind::kInvalidArgument, "x grid must be strictly increasing");
    }
    CavityGeometry g{length_l, x_grid[i], branch_n, empty_mode_k(branch_n, length_l)};
    ResonanceSolution s =
        out.empty() ? solve_resonant_k(g, membrane, branch_n, mirror1, mirror2)
                    : solve_resonant_k_seeded(g, membrane, branch_n, out.back().offset_k,
                                              mirror1, mirror2);
    if (!out.empty() && std::abs(s.omega - out.back().omega) > 0.5 * w_fsr) {
      std::ostringstream os;
      os << "branch jump between grid points " << i - 1 << " and " << i;
      fail(ErrorKind::kDiscontinuity, os.str());
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace mateoptix
