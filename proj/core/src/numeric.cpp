#include "mateoptix/numeric.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "mateoptix/error.hpp"
#include "mateoptix/optics.hpp"

namespace mateoptix::numeric {

double find_root(const ScalarFn& f, double a, double b, int bits, int max_iter) {
  const double fa = f(a);
  const double fb = f(b);
  if (!std::isfinite(fa) || !std::isfinite(fb)) {
    fail(ErrorKind::kNumerical, "non-finite function value at bracket end");
  }
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0)) {
    std::ostringstream os;
    os.precision(17);
    os << "no sign change in bracket [" << a << ", " << b << "]";
    fail(ErrorKind::kRootNotFound, os.str());
  }
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  boost::math::tools::eps_tolerance<double> tol(bits);
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (lo + hi);
}

std::pair<double, double> minimize(const ScalarFn& f, double a, double b, int bits,
                                   int max_iter) {
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  // Brent's tolerance carries an absolute term of order 2^-bits, so search
  // in a unit variable to keep narrow intervals resolvable.
  const double w = b - a;
  auto g = [&](double s) { return f(a + s * w); };
  const auto [s, v] = boost::math::tools::brent_find_minima(g, 0.0, 1.0, bits, iters);
  return {a + s * w, v};
}

Integral integrate(const ScalarFn& f, double a, double b, double abs_tol,
                   unsigned max_depth) {
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, max_depth, 1e-12, &err);
  if (!std::isfinite(v) || err > abs_tol) {
    std::ostringstream os;
    os.precision(3);
    os << "adaptive quadrature reached error " << err << " > " << abs_tol;
    fail(ErrorKind::kQuadratureNotConverged, os.str());
  }
  return {v, err};
}

double mode_phase(int mode_n, double s, double length_l) {
  // N s / L split into integer and fractional parts before scaling by 2 pi.
  const double ratio = static_cast<double>(mode_n) * (s / length_l);
  const double frac = ratio - std::floor(ratio);
  return 2.0 * kPi * frac;
}

double half_mode_phase(int mode_n, double s, double length_l) {
  const double ratio = 0.5 * static_cast<double>(mode_n) * (s / length_l);
  const double frac = ratio - std::floor(ratio);
  return 2.0 * kPi * frac;
}

double wrap_pi(double a) {
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

}  // namespace mateoptix::numeric
