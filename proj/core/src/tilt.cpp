#include "mateoptix/tilt.hpp"

#include <cmath>

#include "mateoptix/numeric.hpp"
#include "mateoptix/parallel.hpp"

namespace mateoptix {
namespace {

struct AiryTerms {
  double a;      // |r1| |rm|
  double top;    // |t1|^2 |tm|^2
  double phi;
};

AiryTerms airy_terms(const TiltedCavity& c, double k) {
  const MembraneCoeffs m = resolve(c.membrane, k);
  const double phi = c.phi ? *c.phi : c.mirror1.r_phase + m.r_phase;
  return {c.mirror1.r_mag * m.r_mag, c.mirror1.t_sq() * m.t_mag * m.t_mag, phi};
}

double airy_at(const AiryTerms& t, double k, double x) {
  const double den = 1.0 + t.a * t.a - 2.0 * t.a * std::cos(2.0 * k * x + t.phi);
  if (!(den > 0.0)) fail(ErrorKind::kDivisionByZero, "lossless two-surface cavity on resonance");
  return t.top / den;
}

}  // namespace

void TiltedCavity::validate() const {
  mirror1.validate();
  if (!(x0 > 0.0)) fail(ErrorKind::kInvalidArgument, "x0 must be positive");
  if (!(sigma > 0.0)) fail(ErrorKind::kInvalidArgument, "beam radius must be positive");
  if (!std::isfinite(theta)) fail(ErrorKind::kInvalidArgument, "tilt must be finite");
}

double airy_transmission(double x0, double k, const Mirror& mirror1,
                         const MembraneSpec& membrane) {
  const MembraneCoeffs m = resolve(membrane, k);
  return airy_transmission(x0, k, mirror1, membrane, mirror1.r_phase + m.r_phase);
}

double airy_transmission(double x0, double k, const Mirror& mirror1,
                         const MembraneSpec& membrane, double phi) {
  if (!(x0 > 0.0)) fail(ErrorKind::kInvalidArgument, "x0 must be positive");
  TiltedCavity c;
  c.x0 = x0;
  c.mirror1 = mirror1;
  c.membrane = membrane;
  c.phi = phi;
  return airy_at(airy_terms(c, k), k, x0);
}

Flagged<double> tilted_transmission_analytic(const TiltedCavity& cavity, double k) {
  cavity.validate();
  const AiryTerms t = airy_terms(cavity, k);
  const double p0 = airy_at(t, k, cavity.x0);
  const double psi = 2.0 * k * cavity.x0 + t.phi;
  const double den = 1.0 + t.a * t.a - 2.0 * t.a * std::cos(psi);
  const double kts = k * cavity.theta * cavity.sigma;
  const double bracket =
      (1.0 + t.a * t.a) * std::cos(psi) + t.a * (std::cos(2.0 * psi) - 3.0);
  Flagged<double> out{p0 * (1.0 - kts * kts * t.a * bracket / (den * den)), {}};
  if (std::abs(kts) >= 0.3) out.warnings |= Warning::kTiltExpansionInvalid;
  return out;
}

double tilted_transmission_quadrature(const TiltedCavity& cavity, double k, double abs_tol) {
  cavity.validate();
  const AiryTerms t = airy_terms(cavity, k);
  const double p0 = airy_at(t, k, cavity.x0);
  const double span = cavity.theta * cavity.sigma;
  const double norm = std::sqrt(2.0 / kPi);
  // Symmetrized about the beam center and measured from the central ray so
  // the small tilt correction keeps its relative precision.
  auto f = [&](double s) {
    const double plus = airy_at(t, k, cavity.x0 + span * s);
    const double minus = airy_at(t, k, cavity.x0 - span * s);
    return (plus + minus - 2.0 * p0) * norm * std::exp(-2.0 * s * s);
  };
  const double correction = numeric::integrate(f, 0.0, 6.0, abs_tol).value;
  return p0 * std::erf(6.0 * std::sqrt(2.0)) + correction;
}

Flagged<std::vector<double>> wavelength_spectrum(const TiltedCavity& cavity,
                                                 const std::vector<double>& lambda_grid,
                                                 TiltMethod method, int threads) {
  if (lambda_grid.empty()) fail(ErrorKind::kInvalidArgument, "wavelength grid is empty");
  cavity.validate();
  Flagged<std::vector<double>> out{std::vector<double>(lambda_grid.size()), {}};
  std::vector<Warnings> flags(lambda_grid.size());
  parallel_for(lambda_grid.size(), threads, [&](std::size_t i) {
    if (!(lambda_grid[i] > 0.0)) fail(ErrorKind::kInvalidArgument, "wavelengths must be positive");
    const double k = 2.0 * kPi / lambda_grid[i];
    if (method == TiltMethod::kAnalytic) {
      const auto p = tilted_transmission_analytic(cavity, k);
      out.value[i] = p.value;
      flags[i] = p.warnings;
    } else {
      out.value[i] = tilted_transmission_quadrature(cavity, k);
    }
  });
  for (const auto& w : flags) out.warnings |= w;
  return out;
}

double flexure_sagitta(double roc, double lateral_offset) {
  if (!(roc > 0.0)) fail(ErrorKind::kInvalidArgument, "radius of curvature must be positive");
  return lateral_offset * lateral_offset / (2.0 * roc);
}

}  // namespace mateoptix
