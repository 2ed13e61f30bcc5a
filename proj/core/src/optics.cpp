#include "mateoptix/optics.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "mateoptix/error.hpp"

namespace mateoptix {
namespace {

bool finite(double v) { return std::isfinite(v); }

}  // namespace

Mirror Mirror::from_power_transmission(double t_sq, double loss_s, double r_phase) {
  if (!(t_sq >= 0.0 && t_sq <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "mirror power transmission outside [0,1]");
  }
  Mirror m;
  m.t_mag = std::sqrt(t_sq);
  m.r_mag = std::sqrt(1.0 - t_sq);
  m.r_phase = r_phase;
  m.loss_s = loss_s;
  m.validate();
  return m;
}

void Mirror::validate() const {
  if (!finite(r_mag) || !finite(t_mag) || !finite(r_phase) || !finite(loss_s)) {
    fail(ErrorKind::kInvalidArgument, "mirror fields must be finite");
  }
  if (r_mag < 0.0 || r_mag > 1.0 || t_mag < 0.0 || t_mag > 1.0) {
    fail(ErrorKind::kInvalidArgument, "mirror |r| and |t| must lie in [0,1]");
  }
  if (r_mag * r_mag + t_mag * t_mag > 1.0 + 1e-12) {
    fail(ErrorKind::kInvalidArgument, "mirror violates |r|^2 + |t|^2 <= 1");
  }
  if (loss_s < 0.0) fail(ErrorKind::kInvalidArgument, "mirror loss_s must be >= 0");
}

MembraneCoeffs MembraneCoeffs::lossless(double r_mag, double r_phase) {
  if (!finite(r_mag) || !finite(r_phase) || r_mag < 0.0 || r_mag > 1.0) {
    fail(ErrorKind::kInvalidArgument, "membrane |r| must lie in [0,1]");
  }
  return {r_mag, r_phase, std::sqrt(1.0 - r_mag * r_mag), r_phase - kPi / 2};
}

MembraneCoeffs MembraneCoeffs::presentation(double r_mag) {
  return lossless(r_mag, kPi);
}

void MembraneCoeffs::validate(double tol) const {
  if (!finite(r_mag) || !finite(t_mag) || !finite(r_phase) || !finite(t_phase)) {
    fail(ErrorKind::kInvalidArgument, "membrane coefficients must be finite");
  }
  if (r_mag < 0.0 || t_mag < 0.0) {
    fail(ErrorKind::kInvalidArgument, "membrane magnitudes must be non-negative");
  }
  const double power = r_mag * r_mag + t_mag * t_mag;
  if (std::abs(power - 1.0) > tol) {
    std::ostringstream os;
    os << "membrane is not lossless: |r|^2+|t|^2 = " << power;
    fail(ErrorKind::kInvalidArgument, os.str());
  }
  const Complex unit = std::polar(1.0, 2.0 * (t_phase - r_phase));
  if (std::abs(unit + 1.0) > tol) {
    fail(ErrorKind::kInvalidArgument,
         "membrane phases violate exp(2i(phi_t - phi_r)) = -1");
  }
}

MembraneAmplitudes slab_amplitudes(double n, double d, long double k) {
  if (!finite(n) || !finite(d) || !std::isfinite(k)) {
    fail(ErrorKind::kInvalidArgument, "slab parameters must be finite");
  }
  if (n < 1.0 || d < 0.0 || k <= 0.0L) {
    fail(ErrorKind::kInvalidArgument, "slab requires n >= 1, d >= 0, k > 0");
  }
  using W = std::complex<long double>;
  const long double r01 = (1.0L - n) / (1.0L + n);
  const long double beta = static_cast<long double>(n) * k * d;
  const W e2 = std::polar(1.0L, 2.0L * beta);
  const W denom = 1.0L - r01 * r01 * e2;
  W r = r01 * (1.0L - e2) / denom;
  W t = (1.0L - r01 * r01) * std::polar(1.0L, beta) / denom;
  // Renormalize away rounding so the unitarity invariant holds.
  const long double norm = std::hypot(std::abs(r), std::abs(t));
  return {r / norm, t / norm};
}

MembraneCoeffs slab_coefficients(double n, double d, double k) {
  const MembraneAmplitudes a = slab_amplitudes(n, d, k);
  MembraneCoeffs c;
  c.t_mag = static_cast<double>(std::abs(a.t));
  c.t_phase = static_cast<double>(std::arg(a.t));
  c.r_mag = static_cast<double>(std::abs(a.r));
  // A transparent slab has no reflection phase; continue the thin-slab
  // limit so the lossless phase relation still holds.
  c.r_phase = c.r_mag > 0.0 ? static_cast<double>(std::arg(a.r)) : c.t_phase + kPi / 2;
  return c;
}

MembraneCoeffs thin_membrane_coefficients(double n, double d, double k) {
  if (!finite(n) || !finite(d) || !finite(k) || n < 1.0 || d < 0.0 || k <= 0.0) {
    fail(ErrorKind::kInvalidArgument, "thin membrane requires n >= 1, d >= 0, k > 0");
  }
  const double zeta = (n * n - 1.0) * k * d / 2.0;
  const double phase_t = std::atan(zeta);
  const double norm = std::sqrt(1.0 + zeta * zeta);
  return {zeta / norm, phase_t + kPi / 2, 1.0 / norm, phase_t};
}

MembraneCoeffs resolve(const MembraneSpec& membrane, double k) {
  if (const auto* slab = std::get_if<Slab>(&membrane)) {
    return slab_coefficients(slab->n, slab->d, k);
  }
  const auto& c = std::get<MembraneCoeffs>(membrane);
  c.validate();
  return c;
}

MembraneAmplitudes resolve_amplitudes(const MembraneSpec& membrane, long double k) {
  if (const auto* slab = std::get_if<Slab>(&membrane)) {
    return slab_amplitudes(slab->n, slab->d, k);
  }
  const auto& c = std::get<MembraneCoeffs>(membrane);
  c.validate();
  return {std::polar<long double>(c.r_mag, c.r_phase), std::polar<long double>(c.t_mag, c.t_phase)};
}

void CavityGeometry::validate() const {
  if (!(length_l > 0.0) || !(membrane_x > 0.0) || !(membrane_x < length_l)) {
    fail(ErrorKind::kInvalidArgument, "geometry requires 0 < x < L");
  }
  if (!(wavenumber_k > 0.0)) fail(ErrorKind::kInvalidArgument, "wavenumber must be > 0");
  if (mode_index_n < 1) fail(ErrorKind::kInvalidArgument, "mode index must be >= 1");
}

double MechanicalMode::x_zpf() const { return zero_point_motion(mass_m, omega_mech); }

double fsr(double length_l) {
  if (!(length_l > 0.0) || !finite(length_l)) {
    fail(ErrorKind::kInvalidArgument, "fsr requires L > 0");
  }
  return kPi * kSpeedOfLight / length_l;
}

double zero_point_motion(double mass_m, double omega_mech) {
  if (!(mass_m > 0.0) || !(omega_mech > 0.0) || !finite(mass_m) || !finite(omega_mech)) {
    fail(ErrorKind::kInvalidArgument, "zero-point motion requires m > 0 and Omega > 0");
  }
  return std::sqrt(kHbar / (2.0 * mass_m * omega_mech));
}

int nearest_mode_index(double wavelength, double length_l) {
  if (!(wavelength > 0.0) || !(length_l > 0.0)) {
    fail(ErrorKind::kInvalidArgument, "nearest_mode_index requires positive inputs");
  }
  return static_cast<int>(std::lround(2.0 * length_l / wavelength));
}

}  // namespace mateoptix
