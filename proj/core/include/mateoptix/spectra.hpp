#pragma once

// 1D transfer-matrix model of the mirror-membrane-mirror stack, probed in
// reflection through mirror 1 with internal loss S1 and mode matching eps.

#include <vector>

#include "mateoptix/error.hpp"
#include "mateoptix/optics.hpp"

namespace mateoptix {

struct CavityModel {
  Mirror mirror1;  // loss_s = S1, round-trip power loss at its inner face
  Mirror mirror2;  // effective |t2| absorbs M2's internal loss
  MembraneSpec membrane = MembraneCoeffs{};
  double length_l = 0.1;
  double mode_match_eps = 1.0;
  double wavelength = 1550e-9;  // picks the probed mode N

  int mode_index() const { return nearest_mode_index(wavelength, length_l); }
  void validate() const;
};

struct StackResponse {
  Complex r;  // reflected amplitude, incidence through mirror 1
  Complex t;  // amplitude leaving through mirror 2
};

// Full response at wavenumber k with the membrane at x from mirror 1.
StackResponse stack_response(const CavityModel& model, double k, double x);
// Same at k = N pi / L + offset, keeping round-trip phases exact for N >> 1.
StackResponse stack_response_at(const CavityModel& model, int mode_n, double offset,
                                double x);

// Largest raw |r|^2 between two resonances near mode N: the off-resonance
// reference used to normalize reflected power.
double off_resonance_reflection(const CavityModel& model, int mode_n, double x);

// Normalized reflected power (1-eps) + eps |r|^2 over a laser detuning grid
// (rad/s, relative to N omega_FSR for the model's mode N).
std::vector<double> reflection_trace(const CavityModel& model, double x,
                                     const std::vector<double>& detuning_grid);

struct SpectrumMap {
  std::vector<double> x_grid;
  std::vector<double> detuning_grid;
  std::vector<std::vector<double>> values;  // values[i][j] at x_grid[i], detuning_grid[j]
  Warnings warnings;
};

SpectrumMap spectrum_map(const CavityModel& model, const std::vector<double>& x_grid,
                         const std::vector<double>& detuning_grid, int threads = 1);

// Detuning of the deepest point of each map row, parabola-refined.
std::vector<double> ridge_detunings(const SpectrumMap& map);

// Backstop displacement dL mapped onto laser detuning at wavenumber k.
double backstop_detuning(double delta_l, double k, double length_l);

struct LinewidthFit {
  double kappa = 0.0;    // FWHM, rad/s
  double center = 0.0;   // rad/s
  double depth = 0.0;    // baseline - minimum
  double baseline = 0.0;
  double minimum = 0.0;  // fitted value at the center
};

// Lorentzian fit b - d / (1 + (2 (delta - delta0) / kappa)^2) to one dip.
// Throws fit-failed when the dip is shallower than noise_floor.
LinewidthFit extract_linewidth(const std::vector<double>& trace,
                               const std::vector<double>& detuning_grid,
                               double noise_floor = 1e-6);

enum class SweepMethod {
  kDirect,      // dip minimum and half-depth crossings located by root finding
  kLorentzian,  // sampled trace around the resonance, then extract_linewidth
};

struct SweepPoint {
  double x = 0.0;
  double kappa = 0.0;          // rad/s
  double reflection = 0.0;     // normalized reflected power on resonance
  double center = 0.0;         // detuning of the dip, rad/s
};

std::vector<SweepPoint> position_sweep(const CavityModel& model,
                                       const std::vector<double>& x_grid,
                                       SweepMethod method = SweepMethod::kDirect,
                                       int threads = 1);

}  // namespace mateoptix
