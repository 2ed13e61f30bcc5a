#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) least squares with numeric
// central-difference Jacobians, box bounds and fixed parameters.

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mateoptix/error.hpp"

namespace mateoptix {

struct Parameter {
  std::string name;
  double value = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool fixed = false;
  double scale = 0.0;  // typical magnitude; 0 means use |value| or 1
};

// Fills r with weighted residuals (model - data) / sigma for the full
// parameter vector (fixed entries included).
using ResidualFn = std::function<void(const std::vector<double>& params, std::vector<double>& r)>;

struct FitProblem {
  std::vector<Parameter> parameters;
  ResidualFn residuals;
  // True when residuals carry real per-point sigmas; otherwise the
  // covariance is rescaled by the reduced chi^2.
  bool sigma_given = true;
};

struct FitOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-8;
  double relative_step = 1e-6;
  double chi2_floor = 1e-24;
};

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> uncertainties;  // 1 sigma; 0 for fixed, NaN if unidentifiable
  std::vector<bool> fixed;
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  int dof = 0;
  std::vector<double> residuals;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  double condition_number = 0.0;
  std::vector<std::vector<double>> covariance;   // free parameters only
  std::vector<std::vector<double>> correlation;  // free parameters only
  std::vector<std::string> free_names;
  std::string status;
  Warnings warnings;
  std::map<std::string, double> extras;

  double value(const std::string& name) const;
  double uncertainty(const std::string& name) const;
};

FitResult least_squares_solve(const FitProblem& problem, const FitOptions& options = {});

}  // namespace mateoptix
