#pragma once

// Shared domain types: mirrors, membranes, cavity geometry, mechanical mode.
// Units are SI throughout; angles in radians.

#include <complex>
#include <numbers>
#include <variant>

namespace mateoptix {

using Complex = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;   // m/s
inline constexpr double kHbar = 1.054571817e-34;       // J s
inline constexpr double kPi = std::numbers::pi;

// End mirror. Reflection r_mag * exp(i r_phase) seen from either side;
// transmission t_mag * exp(i (r_phase - pi/2)), so the default phase pi
// gives the (-|r|, i|t|) convention.
struct Mirror {
  double r_mag = 1.0;
  double r_phase = kPi;
  double t_mag = 0.0;
  double loss_s = 0.0;  // round-trip power loss exponent at the inner face

  // Lossless coating with power transmission t_sq.
  static Mirror from_power_transmission(double t_sq, double loss_s = 0.0,
                                        double r_phase = kPi);

  Complex r() const { return std::polar(r_mag, r_phase); }
  Complex t() const { return std::polar(t_mag, r_phase - kPi / 2); }
  double t_sq() const { return t_mag * t_mag; }

  void validate() const;
};

// Complex coefficients of a lossless membrane.
struct MembraneCoeffs {
  double r_mag = 0.0;
  double r_phase = 0.0;
  double t_mag = 1.0;
  double t_phase = -kPi / 2;

  // r = |r| exp(i r_phase), t = sqrt(1-|r|^2) exp(i (r_phase - pi/2)).
  static MembraneCoeffs lossless(double r_mag, double r_phase);
  // r = -|r|, t = i|t|: the convention that makes avoided crossings visible.
  static MembraneCoeffs presentation(double r_mag);

  Complex r() const { return std::polar(r_mag, r_phase); }
  Complex t() const { return std::polar(t_mag, t_phase); }

  // Throws unless |r|^2+|t|^2 = 1 and exp(2i(phi_t - phi_r)) = -1 within tol.
  void validate(double tol = 1e-12) const;
};

struct Slab {
  double n = 2.0;  // refractive index
  double d = 0.0;  // thickness, m
};

using MembraneSpec = std::variant<Slab, MembraneCoeffs>;

// Resolve a membrane to coefficients at wavenumber k (slabs are dispersive).
MembraneCoeffs resolve(const MembraneSpec& membrane, double k);

// Extended-precision amplitudes, for callers that resolve the membrane
// inside a sweep and need it smooth in k below double resolution.
struct MembraneAmplitudes {
  std::complex<long double> r;
  std::complex<long double> t;
};
MembraneAmplitudes resolve_amplitudes(const MembraneSpec& membrane, long double k);

// Lossless dielectric slab in vacuum, reference planes at its two faces.
MembraneCoeffs slab_coefficients(double n, double d, double k);
MembraneAmplitudes slab_amplitudes(double n, double d, long double k);

// Infinitesimally thin membrane of the same optical polarizability:
// r = i zeta / (1 - i zeta), t = 1 / (1 - i zeta), zeta = (n^2-1) k d / 2.
MembraneCoeffs thin_membrane_coefficients(double n, double d, double k);

struct CavityGeometry {
  double length_l = 0.1;
  double membrane_x = 0.05;  // from mirror 1
  int mode_index_n = 1;
  double wavenumber_k = 2 * kPi / 1550e-9;

  void validate() const;
};

struct MechanicalMode {
  double mass_m = 1.0;
  double omega_mech = 1.0;

  double x_zpf() const;
};

// Empty-cavity free spectral range, pi c / L (rad/s).
double fsr(double length_l);

// sqrt(hbar / (2 m Omega)).
double zero_point_motion(double mass_m, double omega_mech);

// N-th empty cavity wavenumber, N pi / L.
inline double empty_mode_k(int mode_n, double length_l) {
  return kPi * mode_n / length_l;
}

// Nearest empty-cavity mode index for a given vacuum wavelength.
int nearest_mode_index(double wavelength, double length_l);

}  // namespace mateoptix
