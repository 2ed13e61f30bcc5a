#pragma once

// Dispersive (G1, G2) and dissipative (B~) optomechanical couplings, the
// strong-coupling parameters A1~, A2~ and the MATE/MIM enhancement ratios.

#include <vector>

#include "mateoptix/error.hpp"
#include "mateoptix/optics.hpp"
#include "mateoptix/resonance.hpp"

namespace mateoptix {

struct DispersiveCoupling {
  double g1 = 0.0;  // rad/s/m
  double g2 = 0.0;  // rad/s/m^2
};

DispersiveCoupling dispersive_mim(double dx, int branch_n, const MembraneSpec& membrane,
                                  double length_l);
DispersiveCoupling dispersive_mate(double dx, int branch_n, const MembraneSpec& membrane,
                                   double length_l);

enum class CouplingGeometry { kMim, kMate };
enum class ExtremumKind { kG1Max, kG2Max };

struct Extremum {
  double dx = 0.0;
  double value = 0.0;
  ExtremumKind kind = ExtremumKind::kG1Max;
};

// Closed-form extrema inside one period [0, lambda_N / 2).
std::vector<Extremum> extremal_couplings(const MembraneSpec& membrane, double length_l,
                                         int branch_n, CouplingGeometry geometry);

// MATE positions with G1 = 0 inside one period, ascending.
std::vector<double> pure_quadratic_points(const MembraneSpec& membrane, int branch_n,
                                          double length_l);

enum class DerivativeMethod { kAnalytic, kNumeric };

// Position of the membrane measured from mirror 1 for a placement and offset.
double membrane_position(double dx, double length_l, Placement placement);

// B~ = (d kappa / dx) x_zpf / kappa along the resonance branch. Analytic
// forms assume a single-port cavity (mirror 2 lossless and opaque).
double dissipative_b(double dx, int branch_n, const MembraneSpec& membrane,
                     const Mirror& mirror1, const Mirror& mirror2, double length_l,
                     const MechanicalMode& mode, Placement placement,
                     DerivativeMethod method);

struct PurePoint {
  double dx = 0.0;
  double b_tilde = 0.0;
};

// Closed-form B~ at the purely quadratic points of a placement.
std::vector<PurePoint> pure_point_dissipative(const MembraneSpec& membrane,
                                              const MechanicalMode& mode, double length_l,
                                              int branch_n, Placement placement);

struct StrongParameters {
  double a1_tilde = 0.0;
  double a2_tilde = 0.0;
};

StrongParameters strong_parameters(double g1, double g2, double kappa_value, double x_zpf);

struct CouplingReport {
  double dx = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double kappa = 0.0;
  double b_tilde = 0.0;
  double a1_tilde = 0.0;
  double a2_tilde = 0.0;
  Warnings warnings;
};

// Everything at one position; kappa uses the closed-form resonant wavenumber.
CouplingReport coupling_report(double dx, int branch_n, const MembraneSpec& membrane,
                               const Mirror& mirror1, const Mirror& mirror2,
                               double length_l, const MechanicalMode& mode,
                               Placement placement, DerivativeMethod method);

// Small-|t_m| limits of the MATE/MIM maxima ratios.
struct EnhancementRatios {
  double g1 = 0.0;
  double g2 = 0.0;
  double b_tilde = 0.0;
  double a2_tilde = 0.0;
};

EnhancementRatios enhancement_limits(double t_mag);

// Small-|t_m| limit of max A1~, common to both geometries.
double a1_max_limit(int branch_n, double length_l, double x_zpf, double t1_sq,
                    double t_mag);

struct MeasuredMaxima {
  EnhancementRatios mim;   // maxima of |G1|, |G2|, |B~|, |A2~|
  EnhancementRatios mate;  // same, MATE with the membrane at the input mirror
  EnhancementRatios ratios;
  double a1_mim = 0.0;
  double a1_mate = 0.0;
};

// Maximize each coupling over one period on a dense grid refined by Brent's
// method; single-port cavity (mirror 2 ignored).
MeasuredMaxima measure_maxima(const MembraneSpec& membrane, const Mirror& mirror1,
                              double length_l, int branch_n, const MechanicalMode& mode,
                              int grid_points = 0);

}  // namespace mateoptix
