#include "mateoptix/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <functional>

#include "mateoptix/lsq.hpp"
#include "mateoptix/numeric.hpp"
#include "mateoptix/parallel.hpp"
#include "mateoptix/resonance.hpp"

namespace mateoptix {
namespace {

// Stack algebra runs in extended precision: near resonance 1 - r gamma is
// small and double rounding would otherwise show up as fit noise.
using Wide = std::complex<long double>;

Wide widen(Complex z) { return {z.real(), z.imag()}; }

// Terminate a section with reflection gamma behind an interface (r, t).
Wide dress_reflection(Wide r, Wide t, Wide gamma) {
  const Wide den = 1.0L - r * gamma;
  if (std::abs(den) == 0.0L) {
    fail(ErrorKind::kDivisionByZero, "lossless stack composition is singular");
  }
  return r + t * t * gamma / den;
}

Wide dress_transmission(Wide r, Wide t, Wide gamma, Wide trans) {
  return t * trans / (1.0L - r * gamma);
}

void require_increasing(const std::vector<double>& g, const char* what) {
  if (g.empty()) fail(ErrorKind::kInvalidArgument, std::string(what) + " grid is empty");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!(g[i] > g[i - 1])) {
      fail(ErrorKind::kInvalidArgument, std::string(what) + " grid must be strictly increasing");
    }
  }
}

CavityGeometry geometry_for(const CavityModel& model, double x) {
  CavityGeometry g;
  g.length_l = model.length_l;
  g.membrane_x = x;
  g.mode_index_n = model.mode_index();
  g.wavenumber_k = empty_mode_k(g.mode_index_n, model.length_l);
  return g;
}

// Brent stops at sqrt(eps) in the argument; polish the extremum of f near
// x to a root of its centred difference so the value is exact to rounding.
std::pair<double, double> polish_extremum(const std::function<double(double)>& f, double x,
                                          double scale) {
  const double h = 1e-4 * scale;
  auto slope = [&](double u) { return f(u + h) - f(u - h); };
  double w = 1e-5 * scale;
  for (int i = 0; i < 4; ++i, w *= 10.0) {
    const double a = slope(x - w);
    const double b = slope(x + w);
    if ((a < 0) != (b < 0)) {
      const double root = numeric::find_root(slope, x - w, x + w);
      return {root, f(root)};
    }
  }
  return {x, f(x)};
}

double parabola_vertex(double x0, double x1, double x2, double y0, double y1, double y2) {
  const double curv = ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0);
  if (!(curv > 0.0)) return x1;
  const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
  const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
  if (den == 0.0) return x1;
  return std::clamp(x1 - 0.5 * num / den, x0, x2);
}

}  // namespace

void CavityModel::validate() const {
  mirror1.validate();
  mirror2.validate();
  if (!(length_l > 0.0)) fail(ErrorKind::kInvalidArgument, "cavity length must be positive");
  if (!(mode_match_eps >= 0.0 && mode_match_eps <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "mode matching eps must lie in [0, 1]");
  }
  if (!(wavelength > 0.0)) fail(ErrorKind::kInvalidArgument, "wavelength must be positive");
}

namespace {

struct WideResponse {
  Wide r;
  Wide t;
};

WideResponse stack_wide(const CavityModel& model, int mode_n, long double offset, double x) {
  const double length_l = model.length_l;
  if (!(x > 0.0 && x < length_l)) {
    fail(ErrorKind::kInvalidArgument, "stack response requires 0 < x < L");
  }
  if (model.mirror1.t_mag == 0.0 && model.mirror1.loss_s == 0.0 &&
      model.mirror2.t_mag == 0.0 && model.mirror2.loss_s == 0.0) {
    fail(ErrorKind::kDivisionByZero, "closed lossless cavity: both end mirrors reflect fully");
  }
  const MembraneAmplitudes mem =
      resolve_amplitudes(model.membrane, empty_mode_k(mode_n, length_l) + offset);
  const double right = length_l - x;

  Wide gamma = widen(model.mirror2.r()) * std::exp(-0.5L * model.mirror2.loss_s);
  Wide trans = widen(model.mirror2.t());

  auto propagate = [&](double s) {
    const long double round = numeric::mode_phase(mode_n, s, length_l) + 2.0L * offset * s;
    const long double single = numeric::half_mode_phase(mode_n, s, length_l) + offset * s;
    gamma *= std::polar(1.0L, round);
    trans *= std::polar(1.0L, single);
  };

  const Wide rm = mem.r;
  const Wide tm = mem.t;
  propagate(right);
  trans = dress_transmission(rm, tm, gamma, trans);
  gamma = dress_reflection(rm, tm, gamma);
  propagate(x);

  gamma *= std::exp(-0.5L * model.mirror1.loss_s);
  trans *= std::exp(-0.25L * model.mirror1.loss_s);
  const Wide r1 = widen(model.mirror1.r());
  const Wide t1 = widen(model.mirror1.t());
  trans = dress_transmission(r1, t1, gamma, trans);
  gamma = dress_reflection(r1, t1, gamma);
  return {gamma, trans};
}

Complex narrow(Wide z) {
  return {static_cast<double>(z.real()), static_cast<double>(z.imag())};
}

}  // namespace

StackResponse stack_response_at(const CavityModel& model, int mode_n, double offset,
                                double x) {
  const WideResponse w = stack_wide(model, mode_n, offset, x);
  return {narrow(w.r), narrow(w.t)};
}

namespace {

// Normalized power at detuning base + d, given the off-resonance raw
// reflection. Sweeps pass d relative to the resonance so it keeps full
// precision on the scale of a linewidth.
struct Normalized {
  const CavityModel* model;
  int mode_n;
  double x;
  long double reference;
  double base = 0.0;

  double operator()(double d) const {
    const long double eps = model->mode_match_eps;
    const long double offset =
        (static_cast<long double>(base) + static_cast<long double>(d)) / kSpeedOfLight;
    const long double raw = std::norm(stack_wide(*model, mode_n, offset, x).r);
    return static_cast<double>(((1.0L - eps) + eps * raw) / reference);
  }
};

Normalized normalized(const CavityModel& model, double x, double base = 0.0) {
  const int n = model.mode_index();
  const long double eps = model.mode_match_eps;
  const long double ref = (1.0L - eps) + eps * off_resonance_reflection(model, n, x);
  return {&model, n, x, ref, base};
}

}  // namespace

StackResponse stack_response(const CavityModel& model, double k, double x) {
  if (!(k > 0.0)) fail(ErrorKind::kInvalidArgument, "wavenumber must be positive");
  const long n = std::max(1L, std::lround(k * model.length_l / kPi));
  const double offset = k - empty_mode_k(static_cast<int>(n), model.length_l);
  return stack_response_at(model, static_cast<int>(n), offset, x);
}

double off_resonance_reflection(const CavityModel& model, int mode_n, double x) {
  const CavityGeometry g = geometry_for(model, x);
  const double res = solve_resonant_k(g, model.membrane, mode_n).offset_k;
  const double mid = res + kPi / (2.0 * model.length_l);
  const double half = kPi / (4.0 * model.length_l);
  auto neg = [&](double d) {
    const long double off = static_cast<long double>(mid) + d;
    return -static_cast<double>(std::norm(stack_wide(model, mode_n, off, x).r));
  };
  const double best = numeric::minimize(neg, -half, half).first;
  return -polish_extremum(neg, best, half).second;
}

std::vector<double> reflection_trace(const CavityModel& model, double x,
                                     const std::vector<double>& detuning_grid) {
  if (detuning_grid.empty()) fail(ErrorKind::kInvalidArgument, "detuning grid is empty");
  model.validate();
  if (model.mode_match_eps == 0.0) return std::vector<double>(detuning_grid.size(), 1.0);
  const Normalized f = normalized(model, x);
  std::vector<double> out;
  out.reserve(detuning_grid.size());
  for (double d : detuning_grid) out.push_back(f(d));
  return out;
}

SpectrumMap spectrum_map(const CavityModel& model, const std::vector<double>& x_grid,
                         const std::vector<double>& detuning_grid, int threads) {
  model.validate();
  require_increasing(x_grid, "position");
  require_increasing(detuning_grid, "detuning");

  SpectrumMap map;
  map.x_grid = x_grid;
  map.detuning_grid = detuning_grid;
  map.values.resize(x_grid.size());
  std::vector<double> kappas(x_grid.size(), 0.0);
  parallel_for(x_grid.size(), threads, [&](std::size_t i) {
    map.values[i] = reflection_trace(model, x_grid[i], detuning_grid);
    const CavityGeometry g = geometry_for(model, x_grid[i]);
    kappas[i] = solve_resonant_k(g, model.membrane, g.mode_index_n, model.mirror1,
                                 model.mirror2)
                    .kappa;
  });

  double step = 0.0;
  for (std::size_t j = 1; j < detuning_grid.size(); ++j) {
    step = std::max(step, detuning_grid[j] - detuning_grid[j - 1]);
  }
  const double kappa_min = *std::min_element(kappas.begin(), kappas.end());
  if (detuning_grid.size() < 2 || step > kappa_min / 3.0) map.warnings |= Warning::kCoarseGrid;
  return map;
}

std::vector<double> ridge_detunings(const SpectrumMap& map) {
  const auto& d = map.detuning_grid;
  std::vector<double> out;
  out.reserve(map.values.size());
  for (const auto& row : map.values) {
    const auto it = std::min_element(row.begin(), row.end());
    const auto j = static_cast<std::size_t>(it - row.begin());
    if (j == 0 || j + 1 == row.size()) {
      out.push_back(d[j]);
    } else {
      out.push_back(parabola_vertex(d[j - 1], d[j], d[j + 1], row[j - 1], row[j], row[j + 1]));
    }
  }
  return out;
}

double backstop_detuning(double delta_l, double k, double length_l) {
  return -2.0 * k * delta_l * kSpeedOfLight / (2.0 * length_l);
}

LinewidthFit extract_linewidth(const std::vector<double>& trace,
                               const std::vector<double>& detuning_grid, double noise_floor) {
  const std::size_t n = trace.size();
  if (n != detuning_grid.size()) {
    fail(ErrorKind::kInvalidArgument, "trace and detuning grid differ in length");
  }
  if (n < 5) fail(ErrorKind::kInvalidArgument, "linewidth fit needs at least 5 points");
  require_increasing(detuning_grid, "detuning");

  const auto& d = detuning_grid;
  const std::size_t i0 =
      static_cast<std::size_t>(std::min_element(trace.begin(), trace.end()) - trace.begin());
  const double lo = trace[i0];
  const double hi = *std::max_element(trace.begin(), trace.end());
  if (!(hi - lo > noise_floor)) {
    fail(ErrorKind::kFitFailed, "trace has no dip above the noise floor");
  }
  double center = d[i0];
  if (i0 > 0 && i0 + 1 < n) {
    center = parabola_vertex(d[i0 - 1], d[i0], d[i0 + 1], trace[i0 - 1], trace[i0], trace[i0 + 1]);
  }

  const double half = 0.5 * (lo + hi);
  auto crossing = [&](int dir) -> double {
    for (long i = static_cast<long>(i0); i + dir >= 0 && i + dir < static_cast<long>(n); i += dir) {
      const auto a = static_cast<std::size_t>(i);
      const auto b = static_cast<std::size_t>(i + dir);
      if (trace[b] >= half) {
        const double f = (half - trace[a]) / (trace[b] - trace[a]);
        return std::abs(d[a] + f * (d[b] - d[a]) - center);
      }
    }
    return -1.0;
  };
  const double left = crossing(-1);
  const double right = crossing(+1);
  double width = 0.0;
  if (left > 0 && right > 0) {
    width = left + right;
  } else if (left > 0 || right > 0) {
    width = 2.0 * std::max(left, right);
  } else {
    width = 0.25 * (d.back() - d.front());
  }
  if (!(width > 0.0)) width = d[1] - d[0];

  std::vector<double> shifted(n);
  for (std::size_t i = 0; i < n; ++i) shifted[i] = d[i] - center;

  FitProblem problem;
  problem.sigma_given = false;
  const double depth0 = hi - lo;
  problem.parameters = {
      {"baseline", hi, -std::numeric_limits<double>::infinity(),
       std::numeric_limits<double>::infinity(), false, depth0},
      {"depth", depth0, 0.0, std::numeric_limits<double>::infinity(), false, depth0},
      {"center", 0.0, -std::numeric_limits<double>::infinity(),
       std::numeric_limits<double>::infinity(), false, width},
      {"kappa", width, 1e-9 * width, std::numeric_limits<double>::infinity(), false, width},
  };
  problem.residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    r.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = 2.0 * (shifted[i] - p[2]) / p[3];
      r[i] = p[0] - p[1] / (1.0 + u * u) - trace[i];
    }
  };
  const FitResult fit = least_squares_solve(problem);
  if (!fit.converged) {
    fail(ErrorKind::kFitFailed, "Lorentzian fit did not converge (" + fit.status + ")");
  }
  LinewidthFit out;
  out.baseline = fit.values[0];
  out.depth = fit.values[1];
  out.center = center + fit.values[2];
  out.kappa = fit.values[3];
  out.minimum = out.baseline - out.depth;
  return out;
}

namespace {

SweepPoint sweep_direct(const CavityModel& model, double x) {
  const CavityGeometry g = geometry_for(model, x);
  const ResonanceSolution sol =
      solve_resonant_k(g, model.membrane, g.mode_index_n, model.mirror1, model.mirror2);
  if (!(sol.kappa > 0.0)) fail(ErrorKind::kFitFailed, "lossless cavity has no reflection dip");
  const double seed = kSpeedOfLight * sol.offset_k;
  const Normalized f = normalized(model, x, seed);
  const double k_est = sol.kappa;
  const double coarse = numeric::minimize(f, -2.0 * k_est, 2.0 * k_est, 52).first;
  const auto [dmin, rmin] = polish_extremum(f, coarse, k_est);
  if (!(1.0 - rmin > 1e-12)) fail(ErrorKind::kFitFailed, "reflection dip is too shallow");
  const double level = 0.5 * (rmin + 1.0);
  const double limit = 0.45 * fsr(model.length_l);
  auto edge = [&](double dir) {
    double w = 0.5 * k_est;
    while (f(dmin + dir * w) < level) {
      w *= 2.0;
      if (w > limit) fail(ErrorKind::kFitFailed, "half-depth crossing beyond half an FSR");
    }
    auto h = [&](double s) { return f(dmin + dir * s) - level; };
    return numeric::find_root(h, 0.0, w);
  };
  SweepPoint p;
  p.x = x;
  p.center = seed + dmin;
  p.reflection = rmin;
  p.kappa = edge(-1.0) + edge(+1.0);
  return p;
}

SweepPoint sweep_lorentzian(const CavityModel& model, double x) {
  const CavityGeometry g = geometry_for(model, x);
  const ResonanceSolution sol =
      solve_resonant_k(g, model.membrane, g.mode_index_n, model.mirror1, model.mirror2);
  if (!(sol.kappa > 0.0)) fail(ErrorKind::kFitFailed, "lossless cavity has no reflection dip");
  const double seed = kSpeedOfLight * sol.offset_k;
  const std::size_t n = 401;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = seed + sol.kappa * (-8.0 + 16.0 * static_cast<double>(i) / (n - 1));
  }
  const LinewidthFit fit = extract_linewidth(reflection_trace(model, x, grid), grid);
  SweepPoint p;
  p.x = x;
  p.center = fit.center;
  p.kappa = fit.kappa;
  p.reflection = fit.minimum;
  return p;
}

}  // namespace

std::vector<SweepPoint> position_sweep(const CavityModel& model,
                                       const std::vector<double>& x_grid, SweepMethod method,
                                       int threads) {
  model.validate();
  if (x_grid.empty()) fail(ErrorKind::kInvalidArgument, "position grid is empty");
  std::vector<SweepPoint> out(x_grid.size());
  parallel_for(x_grid.size(), threads, [&](std::size_t i) {
    try {
      out[i] = method == SweepMethod::kDirect ? sweep_direct(model, x_grid[i])
                                              : sweep_lorentzian(model, x_grid[i]);
    } catch (const Error& e) {
      std::ostringstream os;
      os.precision(17);
      os << "position index " << i << " (x = " << x_grid[i] << "): " << e.what();
      fail(e.kind(), os.str());
    }
  });
  return out;
}

}  // namespace mateoptix
