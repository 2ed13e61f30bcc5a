#pragma once

// Parameter-extraction pipelines built on least_squares_solve, plus the
// synthetic data generators used for round-trip checks and fixtures.

#include <cstdint>
#include <utility>
#include <vector>

#include "mateoptix/lsq.hpp"
#include "mateoptix/optics.hpp"
#include "mateoptix/spectra.hpp"
#include "mateoptix/stretch.hpp"
#include "mateoptix/tilt.hpp"

namespace mateoptix {

// ---------------------------------------------------------------- map fit

// One observed resonance: membrane and backstop piezo readings, the mode
// it belongs to (0, 1, 2, ... relative to the probed mode) and the laser
// detuning in rad/s at which it was recorded.
struct MapPoint {
  double piezo_x_raw = 0.0;
  double piezo_l_raw = 0.0;
  int mode_id = 0;
  double detuning_raw = 0.0;
};

enum class MembraneConvention {
  kThin,          // d with the thin-membrane coefficients
  kSlab,          // d with the exact slab coefficients
  kReflectivity,  // |r_m| free, phase held at r_phase
};

struct MapFitConfig {
  double length_l = 0.1;
  double wavelength = 1550e-9;
  double index_n = 2.0;
  MembraneConvention convention = MembraneConvention::kThin;
  double d_init = 88e-9;
  double r_init = 0.4;
  double r_phase = kPi;
  PolyStretch x_stretch;  // initial guess; c0 free
  PolyStretch l_stretch;  // initial guess; c0 held at zero
  FitOptions options;
};

struct MapFit {
  FitResult fit;
  PolyStretch x_stretch;
  PolyStretch l_stretch;
  MembraneCoeffs membrane;  // at the probe wavelength
};

MapFit fit_resonance_map(const std::vector<MapPoint>& data, const MapFitConfig& config);

struct MapSynthConfig {
  double length_l = 0.1;
  double wavelength = 1550e-9;
  MembraneSpec membrane = Slab{2.0, 88e-9};
  bool thin_convention = false;  // generate with the thin-membrane coefficients
  bool exact_root = true;        // else the closed form
  PolyStretch x_stretch;
  PolyStretch l_stretch;
  int modes = 3;
  int points_per_mode = 60;
  double noise = 0.0;  // rad/s, Gaussian on the mapped detuning
  std::uint64_t seed = 1;
};

std::vector<MapPoint> synth_resonance_map(const MapSynthConfig& config);

// --------------------------------------------------------------- loss fit

struct LossPoint {
  double x = 0.0;
  double kappa = 0.0;  // rad/s
  double r_res = 0.0;  // normalized resonant reflection
  double sigma_kappa = 0.0;
  double sigma_r = 0.0;
};

struct LossFitConfig {
  CavityModel model;  // membrane, length, wavelength, M2 phase; losses are initial guesses
  int threads = 1;
  FitOptions options;
};

struct LossFit {
  FitResult fit;
  double finesse_bound = 0.0;  // 2 pi / S1
};

LossFit fit_loss_budget(const std::vector<LossPoint>& data, const LossFitConfig& config);

std::vector<LossPoint> synth_loss_data(const CavityModel& truth, const std::vector<double>& x_grid,
                                       double relative_noise, std::uint64_t seed, int threads = 1);

// ------------------------------------------------------- transmission fit

// Sample of spectrum `ordinal` (0 for the first observed peak; mode index
// l = l0 - ordinal).
struct TransmissionPoint {
  int ordinal = 0;
  double lambda = 0.0;
  double p_t = 0.0;
  double sigma = 0.0;
};

struct TransmissionFitConfig {
  double phi1 = kPi;
  MembraneSpec membrane = Slab{2.0, 88e-9};
  double beam_sigma = 100e-6;
  int l0_min = 20;
  int l0_max = 30;
  int min_l = 8;
  double r1_sq_init = 0.99;
  double theta0_init = 0.1e-3;
  double a_init = 0.0;
  int threads = 1;
  FitOptions options;  // applied to every candidate l0
};

struct TransmissionFit {
  FitResult fit;
  int l0 = 0;
  std::vector<std::pair<int, double>> chi2_scan;
  std::vector<int> near_ties;  // candidates within one unit of the best chi^2
  std::vector<int> ordinals;   // spectra used
  std::vector<double> x0;      // per used spectrum, m
  std::vector<double> theta;   // per used spectrum, rad
};

TransmissionFit fit_transmission_global(const std::vector<TransmissionPoint>& data,
                                        const TransmissionFitConfig& config);

struct TransmissionSynthConfig {
  int l0 = 24;
  double r1_sq = 0.9935;
  double theta0 = 0.18e-3;
  double a = 40.0;  // rad/m
  double phi1 = kPi;
  MembraneSpec membrane = Slab{2.0, 88e-9};
  double beam_sigma = 100e-6;
  int spectra = 17;
  double lambda_min = 1500e-9;
  double lambda_max = 1600e-9;
  int points = 81;
  double relative_noise = 0.0;  // of each spectrum's peak
  std::uint64_t seed = 1;
};

std::vector<TransmissionPoint> synth_transmission(const TransmissionSynthConfig& config);

// Separation giving a transmission peak of order l at wavenumber k.
double peak_separation(int mode_l, double k, double phi1, const MembraneSpec& membrane);

}  // namespace mateoptix
