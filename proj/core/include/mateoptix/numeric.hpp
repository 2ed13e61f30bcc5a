#pragma once

// Thin wrappers over Boost.Math root finding, minimization and quadrature
// that translate failures into mateoptix::Error.

#include <functional>
#include <utility>

namespace mateoptix::numeric {

using ScalarFn = std::function<double(double)>;

// Bracketed root of f on [a, b]; requires a sign change.
double find_root(const ScalarFn& f, double a, double b, int bits = 52,
                 int max_iter = 200);

// Local minimum of f on [a, b]: (argmin, value).
std::pair<double, double> minimize(const ScalarFn& f, double a, double b,
                                   int bits = 40, int max_iter = 200);

struct Integral {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod quadrature; throws when the estimated error
// exceeds abs_tol.
Integral integrate(const ScalarFn& f, double a, double b, double abs_tol = 1e-8,
                   unsigned max_depth = 20);

// 2 * (N pi / L) * s reduced to [0, 2 pi): the round-trip phase of the N-th
// empty-cavity wavenumber over a segment of length s, accurate for N >> 1.
double mode_phase(int mode_n, double s, double length_l);
// Single-pass counterpart, (N pi / L) * s reduced to [0, 2 pi).
double half_mode_phase(int mode_n, double s, double length_l);

// Wrap an angle into (-pi, pi].
double wrap_pi(double a);

}  // namespace mateoptix::numeric
