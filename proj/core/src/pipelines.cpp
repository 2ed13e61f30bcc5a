#include "mateoptix/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "mateoptix/parallel.hpp"
#include "mateoptix/resonance.hpp"

namespace mateoptix {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Parameter param(std::string name, double value, double lower, double upper, double scale,
                bool fixed = false) {
  Parameter p;
  p.name = std::move(name);
  p.value = value;
  p.lower = lower;
  p.upper = upper;
  p.scale = scale;
  p.fixed = fixed;
  return p;
}

double refined_peak(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto i = static_cast<std::size_t>(std::max_element(ys.begin(), ys.end()) - ys.begin());
  if (i == 0 || i + 1 == ys.size()) return xs[i];
  const double x0 = xs[i - 1], x1 = xs[i], x2 = xs[i + 1];
  const double y0 = ys[i - 1], y1 = ys[i], y2 = ys[i + 1];
  const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
  const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
  if (den == 0.0) return x1;
  return std::clamp(x1 - 0.5 * num / den, x0, x2);
}

MembraneSpec map_membrane(const MapFitConfig& c, double value, double k) {
  switch (c.convention) {
    case MembraneConvention::kThin:
      return thin_membrane_coefficients(c.index_n, value, k);
    case MembraneConvention::kSlab:
      return Slab{c.index_n, value};
    case MembraneConvention::kReflectivity:
      return MembraneCoeffs::lossless(value, c.r_phase);
  }
  return MembraneCoeffs{};
}

}  // namespace

// ---------------------------------------------------------------- map fit

MapFit fit_resonance_map(const std::vector<MapPoint>& data, const MapFitConfig& config) {
  if (data.empty()) fail(ErrorKind::kInvalidArgument, "map fit has no data");
  if (!(config.length_l > 0.0) || !(config.wavelength > 0.0)) {
    fail(ErrorKind::kInvalidArgument, "map fit needs positive length and wavelength");
  }
  config.x_stretch.validate();
  config.l_stretch.validate();
  std::set<int> mode_set;
  for (const auto& p : data) mode_set.insert(p.mode_id);
  if (mode_set.size() < 3) {
    fail(ErrorKind::kInvalidArgument, "map fit needs at least 3 mode traces");
  }
  const std::vector<int> modes(mode_set.begin(), mode_set.end());
  std::map<int, std::size_t> mode_slot;
  for (std::size_t i = 0; i < modes.size(); ++i) mode_slot[modes[i]] = i;

  const double length_l = config.length_l;
  const double k = 2.0 * kPi / config.wavelength;
  const int n0 = nearest_mode_index(config.wavelength, length_l);
  const double w_fsr = fsr(length_l);
  for (const auto& p : data) {
    if (n0 + p.mode_id < 1) fail(ErrorKind::kInvalidArgument, "mode_id below the first mode");
  }

  std::vector<double> observed(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    observed[i] = k * kSpeedOfLight * config.l_stretch(data[i].piezo_l_raw) / length_l +
                  data[i].detuning_raw;
  }
  double raw_lo = kInf, raw_hi = -kInf;
  for (const auto& p : data) {
    raw_lo = std::min(raw_lo, p.piezo_x_raw);
    raw_hi = std::max(raw_hi, p.piezo_x_raw);
  }
  if (std::abs(config.x_stretch(raw_hi) - config.x_stretch(raw_lo)) < 0.5 * config.wavelength) {
    fail(ErrorKind::kInvalidArgument, "map traces must span at least half a wavelength");
  }

  FitProblem problem;
  problem.sigma_given = false;
  if (config.convention == MembraneConvention::kReflectivity) {
    problem.parameters.push_back(param("r_m", config.r_init, 0.0, 0.999, 0.1));
  } else {
    problem.parameters.push_back(param("d", config.d_init, 0.0, kInf, config.d_init));
  }
  const PolyStretch& xs = config.x_stretch;
  const PolyStretch& ls = config.l_stretch;
  problem.parameters.push_back(param("x_c0", xs.c0, -kInf, kInf, 1.0));
  problem.parameters.push_back(param("x_c2", xs.c2, -kInf, kInf, 1e-2));
  problem.parameters.push_back(param("x_c3", xs.c3, -kInf, kInf, 1e-2));
  problem.parameters.push_back(param("x_c4", xs.c4, -kInf, kInf, 1e-2));
  problem.parameters.push_back(param("l_c2", ls.c2, -kInf, kInf, 1e-2));
  problem.parameters.push_back(param("l_c3", ls.c3, -kInf, kInf, 1e-2));
  problem.parameters.push_back(param("l_c4", ls.c4, -kInf, kInf, 1e-2));
  const std::size_t first_offset = problem.parameters.size();

  auto unpack = [&](const std::vector<double>& p) {
    PolyStretch x = xs;
    x.c0 = p[1];
    x.c2 = p[2];
    x.c3 = p[3];
    x.c4 = p[4];
    PolyStretch l = ls;
    l.c0 = 0.0;
    l.c2 = p[5];
    l.c3 = p[6];
    l.c4 = p[7];
    return std::make_pair(x, l);
  };

  auto predict = [&](std::size_t i, const PolyStretch& x,
                     const MembraneSpec& mem) {
    const MapPoint& d = data[i];
    return mate_detuning(x(d.piezo_x_raw), n0 + d.mode_id, mem, length_l);
  };

  // Per-mode offsets start from the mean gap between data and the initial model.
  {
    std::vector<double> p0;
    for (const auto& q : problem.parameters) p0.push_back(q.value);
    const MembraneSpec mem = map_membrane(config, p0[0], k);
    std::vector<double> sum(modes.size(), 0.0), count(modes.size(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t s = mode_slot[data[i].mode_id];
      sum[s] += observed[i] - predict(i, xs, mem);
      count[s] += 1.0;
    }
    for (std::size_t s = 0; s < modes.size(); ++s) {
      problem.parameters.push_back(
          param("offset_" + std::to_string(modes[s]), sum[s] / count[s], -kInf, kInf, w_fsr));
    }
  }

  problem.residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    const auto [x, l] = unpack(p);
    const MembraneSpec mem = map_membrane(config, p[0], k);
    r.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double obs = k * kSpeedOfLight * l(data[i].piezo_l_raw) / length_l +
                         data[i].detuning_raw;
      const double model = predict(i, x, mem) + p[first_offset + mode_slot[data[i].mode_id]];
      r[i] = (model - obs) / w_fsr;
    }
  };

  MapFit out;
  out.fit = least_squares_solve(problem, config.options);
  const auto [x, l] = unpack(out.fit.values);
  out.x_stretch = x;
  out.l_stretch = l;
  const MembraneSpec mem = map_membrane(config, out.fit.values[0], k);
  out.membrane = resolve(mem, k);
  out.fit.extras["reflectivity"] = out.membrane.r_mag;
  out.fit.extras["r_phase"] = out.membrane.r_phase;
  out.fit.extras["base_mode"] = n0;
  if (!x.monotone() || !l.monotone()) {
    out.fit.warnings |= Warning::kNonMonotoneStretch;
    out.fit.status = "invalid-fit: non-monotone stretch";
  }
  const double sig = out.fit.uncertainties[0];
  if (out.membrane.r_mag < 1e-3 || !std::isfinite(sig) ||
      sig >= std::abs(out.fit.values[0])) {
    out.fit.warnings |= Warning::kMembraneUnconstrained;
  }
  return out;
}

std::vector<MapPoint> synth_resonance_map(const MapSynthConfig& c) {
  c.x_stretch.validate();
  c.l_stretch.validate();
  if (c.modes < 1 || c.points_per_mode < 1) {
    fail(ErrorKind::kInvalidArgument, "synthetic map needs modes and points");
  }
  const double k = 2.0 * kPi / c.wavelength;
  const int n0 = nearest_mode_index(c.wavelength, c.length_l);
  const double w_fsr = fsr(c.length_l);
  MembraneSpec mem = c.membrane;
  if (c.thin_convention) {
    const auto* slab = std::get_if<Slab>(&c.membrane);
    if (!slab) fail(ErrorKind::kInvalidArgument, "thin convention needs a slab membrane");
    mem = thin_membrane_coefficients(slab->n, slab->d, k);
  }
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<MapPoint> out;
  for (int m = 0; m < c.modes; ++m) {
    const double offset = (m - 0.5 * (c.modes - 1)) * w_fsr;
    const int n = n0 + m;
    for (int j = 0; j < c.points_per_mode; ++j) {
      MapPoint p;
      p.mode_id = m;
      p.piezo_x_raw = c.x_stretch.raw_min +
                      (c.x_stretch.raw_max - c.x_stretch.raw_min) * (j + 0.5) / c.points_per_mode;
      const double dx = c.x_stretch(p.piezo_x_raw);
      if (!(dx > 0.0 && dx < c.length_l)) {
        fail(ErrorKind::kInvalidArgument, "synthetic membrane position outside the cavity");
      }
      double det = 0.0;
      if (c.exact_root) {
        CavityGeometry g;
        g.length_l = c.length_l;
        g.membrane_x = dx;
        g.mode_index_n = n;
        g.wavenumber_k = empty_mode_k(n, c.length_l);
        det = kSpeedOfLight * solve_resonant_k(g, mem, n).offset_k;
      } else {
        det = mate_detuning(dx, n, mem, c.length_l);
      }
      double y = det + offset;
      if (c.noise > 0.0) y += c.noise * gauss(rng);
      p.piezo_l_raw = c.l_stretch.inverse(y * c.length_l / (k * kSpeedOfLight));
      out.push_back(p);
    }
  }
  return out;
}

// --------------------------------------------------------------- loss fit

namespace {

CavityModel loss_model(const CavityModel& base, const std::vector<double>& p) {
  CavityModel m = base;
  m.mode_match_eps = p[0];
  m.mirror1 = Mirror::from_power_transmission(p[1], p[2], base.mirror1.r_phase);
  m.mirror2 = Mirror::from_power_transmission(p[3], 0.0, base.mirror2.r_phase);
  return m;
}

}  // namespace

LossFit fit_loss_budget(const std::vector<LossPoint>& data, const LossFitConfig& config) {
  if (data.size() < 4) fail(ErrorKind::kInvalidArgument, "loss fit needs at least 4 positions");
  for (const auto& d : data) {
    if (!(d.sigma_kappa > 0.0) || !(d.sigma_r > 0.0)) {
      fail(ErrorKind::kInvalidArgument, "loss fit needs positive sigma_kappa and sigma_r");
    }
  }
  config.model.validate();
  std::vector<double> xs;
  for (const auto& d : data) xs.push_back(d.x);

  const CavityModel& base = config.model;
  FitProblem problem;
  problem.parameters = {
      param("eps", base.mode_match_eps, 0.0, 1.0, 0.1),
      param("t1_sq", base.mirror1.t_sq(), 1e-7, 0.5, 1e-3),
      param("S1", base.mirror1.loss_s, 0.0, 0.5, 1e-4),
      param("t2_sq", base.mirror2.t_sq() + base.mirror2.loss_s, 0.0, 0.5, 1e-4),
  };
  problem.residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    const auto sweep = position_sweep(loss_model(base, p), xs, SweepMethod::kDirect,
                                      config.threads);
    r.resize(2 * data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      r[2 * i] = (sweep[i].kappa - data[i].kappa) / data[i].sigma_kappa;
      r[2 * i + 1] = (sweep[i].reflection - data[i].r_res) / data[i].sigma_r;
    }
  };

  LossFit out;
  out.fit = least_squares_solve(problem, config.options);
  const double s1 = out.fit.values[2];
  out.finesse_bound = s1 > 0.0 ? 2.0 * kPi / s1 : kInf;
  if (std::isfinite(out.finesse_bound)) out.fit.extras["finesse_bound"] = out.finesse_bound;
  return out;
}

std::vector<LossPoint> synth_loss_data(const CavityModel& truth, const std::vector<double>& x_grid,
                                       double relative_noise, std::uint64_t seed, int threads) {
  const auto sweep = position_sweep(truth, x_grid, SweepMethod::kDirect, threads);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double rel = relative_noise > 0.0 ? relative_noise : 0.01;
  std::vector<LossPoint> out;
  for (const auto& s : sweep) {
    LossPoint p;
    p.x = s.x;
    p.sigma_kappa = rel * s.kappa;
    p.sigma_r = rel * s.reflection;
    p.kappa = s.kappa;
    p.r_res = s.reflection;
    if (relative_noise > 0.0) {
      p.kappa += p.sigma_kappa * gauss(rng);
      p.r_res += p.sigma_r * gauss(rng);
    }
    out.push_back(p);
  }
  return out;
}

// ------------------------------------------------------- transmission fit

double peak_separation(int mode_l, double k, double phi1, const MembraneSpec& membrane) {
  const double phi = phi1 + resolve(membrane, k).r_phase;
  const double x0 = (2.0 * kPi * mode_l - phi) / (2.0 * k);
  if (!(x0 > 0.0)) {
    fail(ErrorKind::kInvalidArgument, "mode index " + std::to_string(mode_l) +
                                          " gives a non-positive separation");
  }
  return x0;
}

namespace {

struct Spectrum {
  int ordinal = 0;
  std::vector<double> lambda;
  std::vector<double> p_t;
  std::vector<double> sigma;
};

struct ScanResult {
  FitResult fit;
  std::vector<double> x0;
  std::vector<double> theta;
  bool ok = false;
  std::string error;
};

ScanResult fit_for_l0(const std::vector<Spectrum>& spectra, int l0,
                      const TransmissionFitConfig& c) {
  FitProblem problem;
  problem.parameters = {
      param("r1_sq", c.r1_sq_init, 0.5, 1.0 - 1e-9, 1e-3),
      param("theta0", c.theta0_init, 0.0, kInf, 1e-4),
      param("A", c.a_init, -kInf, kInf, 10.0),
  };
  for (const auto& s : spectra) {
    problem.parameters.push_back(param("lambda_" + std::to_string(s.ordinal),
                                       refined_peak(s.lambda, s.p_t), 0.0, kInf, 1e-9));
  }
  std::size_t total = 0;
  for (const auto& s : spectra) total += s.lambda.size();
  // Sample wavelengths are fixed, so the membrane is resolved once per sample.
  std::vector<MembraneSpec> resolved;
  resolved.reserve(total);
  for (const auto& s : spectra) {
    for (double lam : s.lambda) resolved.emplace_back(resolve(c.membrane, 2.0 * kPi / lam));
  }

  auto geometry = [&](const std::vector<double>& p, std::vector<double>& x0,
                      std::vector<double>& theta) {
    x0.resize(spectra.size());
    theta.resize(spectra.size());
    const double k_ref = 2.0 * kPi / p[3];
    const double x_ref = peak_separation(l0, k_ref, c.phi1, c.membrane);
    for (std::size_t i = 0; i < spectra.size(); ++i) {
      const double kp = 2.0 * kPi / p[3 + i];
      x0[i] = peak_separation(l0 - spectra[i].ordinal, kp, c.phi1, c.membrane);
      theta[i] = p[1] - p[2] * (x0[i] - x_ref);
    }
  };

  problem.residuals = [&](const std::vector<double>& p, std::vector<double>& r) {
    std::vector<double> x0, theta;
    geometry(p, x0, theta);
    r.resize(total);
    std::size_t j = 0;
    for (std::size_t i = 0; i < spectra.size(); ++i) {
      TiltedCavity cav;
      cav.x0 = x0[i];
      cav.theta = theta[i];
      cav.sigma = c.beam_sigma;
      cav.mirror1 = Mirror::from_power_transmission(1.0 - p[0], 0.0, c.phi1);
      const Spectrum& s = spectra[i];
      for (std::size_t q = 0; q < s.lambda.size(); ++q, ++j) {
        const double k = 2.0 * kPi / s.lambda[q];
        cav.membrane = resolved[j];
        r[j] = (tilted_transmission_analytic(cav, k).value - s.p_t[q]) / s.sigma[q];
      }
    }
  };

  ScanResult out;
  out.fit = least_squares_solve(problem, c.options);
  geometry(out.fit.values, out.x0, out.theta);
  out.ok = true;
  return out;
}

}  // namespace

TransmissionFit fit_transmission_global(const std::vector<TransmissionPoint>& data,
                                        const TransmissionFitConfig& c) {
  if (c.l0_max < c.l0_min) fail(ErrorKind::kInvalidArgument, "empty l0 range");
  if (!(c.beam_sigma > 0.0)) fail(ErrorKind::kInvalidArgument, "beam radius must be positive");
  std::map<int, Spectrum> grouped;
  for (const auto& p : data) {
    if (p.ordinal < 0) fail(ErrorKind::kInvalidArgument, "spectrum ordinal must be >= 0");
    if (!(p.lambda > 0.0) || !(p.sigma > 0.0)) {
      fail(ErrorKind::kInvalidArgument, "transmission samples need positive lambda and sigma");
    }
    Spectrum& s = grouped[p.ordinal];
    s.ordinal = p.ordinal;
    s.lambda.push_back(p.lambda);
    s.p_t.push_back(p.p_t);
    s.sigma.push_back(p.sigma);
  }
  // Only spectra that stay at or above min_l for every candidate enter, so
  // chi^2 values across the scan compare like with like.
  std::vector<Spectrum> spectra;
  for (auto& [ordinal, s] : grouped) {
    if (c.l0_min - ordinal >= c.min_l) spectra.push_back(std::move(s));
  }
  if (spectra.size() < 3) {
    fail(ErrorKind::kInvalidArgument, "transmission fit needs at least 3 usable spectra");
  }
  for (auto& s : spectra) {
    std::vector<std::size_t> idx(s.lambda.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return s.lambda[a] < s.lambda[b]; });
    Spectrum sorted;
    sorted.ordinal = s.ordinal;
    for (auto i : idx) {
      sorted.lambda.push_back(s.lambda[i]);
      sorted.p_t.push_back(s.p_t[i]);
      sorted.sigma.push_back(s.sigma[i]);
    }
    s = std::move(sorted);
  }

  const int count = c.l0_max - c.l0_min + 1;
  std::vector<ScanResult> scan(static_cast<std::size_t>(count));
  parallel_for(scan.size(), c.threads, [&](std::size_t i) {
    const int l0 = c.l0_min + static_cast<int>(i);
    try {
      scan[i] = fit_for_l0(spectra, l0, c);
    } catch (const Error& e) {
      scan[i].ok = false;
      scan[i].error = e.what();
    }
  });

  TransmissionFit out;
  std::size_t best = scan.size();
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (!scan[i].ok) continue;
    out.chi2_scan.emplace_back(c.l0_min + static_cast<int>(i), scan[i].fit.chi2);
    if (best == scan.size() || scan[i].fit.chi2 < scan[best].fit.chi2) best = i;
  }
  if (best == scan.size()) {
    fail(ErrorKind::kFitFailed, "no l0 candidate could be fitted: " + scan.front().error);
  }
  out.l0 = c.l0_min + static_cast<int>(best);
  out.fit = scan[best].fit;
  out.x0 = scan[best].x0;
  out.theta = scan[best].theta;
  for (const auto& s : spectra) out.ordinals.push_back(s.ordinal);
  for (const auto& [l0, chi2] : out.chi2_scan) {
    if (l0 != out.l0 && chi2 - out.fit.chi2 < 1.0) out.near_ties.push_back(l0);
  }
  if (!out.near_ties.empty()) out.fit.warnings |= Warning::kAmbiguousL0;
  out.fit.extras["l0"] = out.l0;
  return out;
}

std::vector<TransmissionPoint> synth_transmission(const TransmissionSynthConfig& c) {
  if (c.spectra < 1 || c.points < 2) {
    fail(ErrorKind::kInvalidArgument, "synthetic transmission needs spectra and points");
  }
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<TransmissionPoint> out;
  double x_ref = 0.0;
  for (int i = 0; i < c.spectra; ++i) {
    const double lambda_p = 1550e-9 + 4e-9 * std::sin(1.3 * i + 0.5);
    const double kp = 2.0 * kPi / lambda_p;
    TiltedCavity cav;
    cav.x0 = peak_separation(c.l0 - i, kp, c.phi1, c.membrane);
    if (i == 0) x_ref = cav.x0;
    cav.theta = c.theta0 - c.a * (cav.x0 - x_ref);
    cav.sigma = c.beam_sigma;
    cav.mirror1 = Mirror::from_power_transmission(1.0 - c.r1_sq, 0.0, c.phi1);
    cav.membrane = c.membrane;
    std::vector<double> grid(static_cast<std::size_t>(c.points));
    for (int q = 0; q < c.points; ++q) {
      grid[static_cast<std::size_t>(q)] =
          c.lambda_min + (c.lambda_max - c.lambda_min) * q / (c.points - 1.0);
    }
    const auto spec = wavelength_spectrum(cav, grid);
    const double peak = *std::max_element(spec.value.begin(), spec.value.end());
    const double sigma = (c.relative_noise > 0.0 ? c.relative_noise : 0.01) * peak;
    for (std::size_t q = 0; q < grid.size(); ++q) {
      TransmissionPoint p;
      p.ordinal = i;
      p.lambda = grid[q];
      p.p_t = spec.value[q];
      if (c.relative_noise > 0.0) p.p_t += sigma * gauss(rng);
      p.sigma = sigma;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace mateoptix
