#pragma once

// Transmission through the two-surface mirror-membrane cavity, with the
// membrane wedged by a small angle across a Gaussian beam.

#include <optional>
#include <vector>

#include "mateoptix/error.hpp"
#include "mateoptix/optics.hpp"

namespace mateoptix {

struct TiltedCavity {
  double x0 = 10e-6;     // separation at the beam center, m
  double theta = 0.0;    // wedge slope, rad
  double sigma = 100e-6; // beam radius, m
  Mirror mirror1;
  MembraneSpec membrane = MembraneCoeffs{};
  // Round-trip reflection phase phi1 + phi_m; taken from the coefficients
  // when unset.
  std::optional<double> phi;

  void validate() const;
};

// |t1 tm e^{ikx} / (1 - r1 rm e^{2ikx})|^2.
double airy_transmission(double x0, double k, const Mirror& mirror1,
                         const MembraneSpec& membrane);
double airy_transmission(double x0, double k, const Mirror& mirror1,
                         const MembraneSpec& membrane, double phi);

// Second-order expansion in k theta sigma; flagged when k theta sigma >= 0.3.
Flagged<double> tilted_transmission_analytic(const TiltedCavity& cavity, double k);

// Gaussian-weighted integral of the exact per-ray transmission over the
// tilt axis, |y| <= 6 sigma.
double tilted_transmission_quadrature(const TiltedCavity& cavity, double k,
                                      double abs_tol = 1e-8);

enum class TiltMethod { kAnalytic, kQuadrature };

Flagged<std::vector<double>> wavelength_spectrum(const TiltedCavity& cavity,
                                                 const std::vector<double>& lambda_grid,
                                                 TiltMethod method = TiltMethod::kAnalytic,
                                                 int threads = 1);

// Circular-arc sagitta offset^2 / (2 roc); approximate flexure displacement.
double flexure_sagitta(double roc, double lateral_offset);

}  // namespace mateoptix
