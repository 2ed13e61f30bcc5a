#pragma once

// Cavity resonances: exact root of the lossless resonance condition, the
// membrane-in-the-middle (MIM) and membrane-at-the-edge (MATE) closed forms,
// and the position-dependent energy decay rate.

#include <vector>

#include "mateoptix/error.hpp"
#include "mateoptix/optics.hpp"

namespace mateoptix {

struct ResonanceSolution {
  double wavenumber_k = 0.0;
  double omega = 0.0;
  int branch_n = 0;
  double kappa = 0.0;
  double residual = 0.0;
  double offset_k = 0.0;  // wavenumber_k - N pi / L, kept for precision
  Warnings warnings;
};

// Reflection phase lag alpha(u) = arg(1 + |r| e^{iu}).
double reflection_lag(double r_mag, double u);

// Phi(k) - (pi/2 + N pi) for k = N pi / L + offset. Zero on branch N and
// strictly increasing in offset for |r_m| < 1.
double resonance_phase(double offset, int branch_n, double length_l, double x,
                       const MembraneCoeffs& membrane);

// |(t^2 - r^2) e^{ikL} - e^{-ikL} - 2 r cos(2kx - kL)| / 2.
double general_residual(double offset, int branch_n, double length_l, double x,
                        const MembraneCoeffs& membrane);

// Branch label N of wavenumber k in a cavity of length L.
int resonance_branch(double k, double length_l, double x, const MembraneSpec& membrane);

// Exact resonance on branch N. Mirrors only enter through kappa; the default
// perfect mirrors give kappa = 0 with a lossless-cavity warning.
ResonanceSolution solve_resonant_k(const CavityGeometry& geometry,
                                   const MembraneSpec& membrane, int branch_n,
                                   const Mirror& mirror1 = {}, const Mirror& mirror2 = {});

// Same, but first tries a narrow bracket around a previous offset.
ResonanceSolution solve_resonant_k_seeded(const CavityGeometry& geometry,
                                          const MembraneSpec& membrane, int branch_n,
                                          double seed_offset, const Mirror& mirror1,
                                          const Mirror& mirror2);

// Smallest resonant length L > x for wavenumber k, plus branch * pi / k.
double resonant_length(double k, double x, const MembraneSpec& membrane, int branch = 0);

// omega - N omega_FSR for the closed forms. dx is measured from the cavity
// center (MIM) or from mirror 1 (MATE).
double mim_detuning(double dx, int branch_n, const MembraneSpec& membrane, double length_l);
double mate_detuning(double dx, int branch_n, const MembraneSpec& membrane,
                     double length_l);

double omega_mim(double dx, int branch_n, const MembraneSpec& membrane, double length_l);
double omega_mate(double dx, int branch_n, const MembraneSpec& membrane, double length_l);

enum class Placement { kMim, kMateInput, kMateBackstop };

// Validity flags for the closed forms: short cavity and displacement range.
Warnings closed_form_validity(double dx, int branch_n, const MembraneSpec& membrane,
                              double length_l, Placement placement);

// Decay rate; each port's power loss is |t_j|^2 + S_j.
Flagged<double> kappa(double x, double k, const MembraneSpec& membrane,
                      const Mirror& mirror1, const Mirror& mirror2, double length_l);
// Same with k = N pi / L + offset, evaluated without losing the 2kx phase.
Flagged<double> kappa_on_branch(double x, int branch_n, double offset,
                                const MembraneSpec& membrane, const Mirror& mirror1,
                                const Mirror& mirror2, double length_l);

// Sub-cavity power ratio P2/P1 = (1 + |r|^2 + 2|r| cos(2kx + phi_r)) / (1 - |r|^2).
double subcavity_power_ratio(double x, double k, const MembraneSpec& membrane);

std::vector<ResonanceSolution> trace_branch(const std::vector<double>& x_grid, int branch_n,
                                            const MembraneSpec& membrane,
                                            const Mirror& mirror1, const Mirror& mirror2,
                                            double length_l);

}  // namespace mateoptix
