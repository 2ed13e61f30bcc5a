#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cli_error.hpp"
#include "io.hpp"
#include "mateoptix/couplings.hpp"
#include "mateoptix/pipelines.hpp"
#include "mateoptix/resonance.hpp"
#include "mateoptix/spectra.hpp"
#include "mateoptix/tilt.hpp"

namespace mateoptix::cli {
namespace {

std::vector<double> linspace(double lo, double hi, int n, const std::string& what) {
  if (n < 1) throw CliError("config", what + " needs at least one point");
  if (n == 1) return {lo};
  if (!(hi > lo)) throw CliError("config", what + " needs max > min");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1.0);
  return out;
}

// prefix_min, prefix_max, prefix_points.
std::vector<double> read_grid(const Config& c, const std::string& prefix, int points) {
  return linspace(c.number(prefix + "_min"), c.number(prefix + "_max"),
                  c.integer(prefix + "_points", points), prefix);
}

template <class Enum>
Enum choose(const Config& c, const std::string& key, const std::string& fallback,
            const std::map<std::string, Enum>& options) {
  const std::string v = c.text(key, fallback);
  const auto it = options.find(v);
  if (it == options.end()) {
    std::string allowed;
    for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : "|") + name;
    throw CliError("config", key + ": expected " + allowed + ", got '" + v + "'");
  }
  return it->second;
}

void report(Warnings w, const std::string& context) {
  for (const auto& name : w.names()) spdlog::warn("{}: {}", context, name);
}

Json warnings_json(Warnings w) {
  Json a = Json::array();
  for (const auto& name : w.names()) a.push_back(name);
  return a;
}

Mirror read_mirror(const Config& c, const std::string& section) {
  return Mirror::from_power_transmission(c.number(section + ".t_sq", 0.0),
                                         c.number(section + ".loss", 0.0),
                                         c.number(section + ".phase", kPi));
}

enum class MembraneModel { kSlab, kThin, kCoeffs };

MembraneSpec read_membrane(const Config& c, double k) {
  const auto model = choose<MembraneModel>(
      c, "membrane.model", "slab",
      {{"slab", MembraneModel::kSlab}, {"thin", MembraneModel::kThin},
       {"coeffs", MembraneModel::kCoeffs}});
  switch (model) {
    case MembraneModel::kSlab:
      return Slab{c.number("membrane.n", 2.0), c.number("membrane.d")};
    case MembraneModel::kThin:
      return thin_membrane_coefficients(c.number("membrane.n", 2.0), c.number("membrane.d"), k);
    case MembraneModel::kCoeffs:
      break;
  }
  const bool has_r = c.has("membrane.r");
  if (has_r == c.has("membrane.t")) {
    throw CliError("config", "membrane model coeffs needs exactly one of membrane.r, membrane.t");
  }
  double r = 0.0;
  if (has_r) {
    r = c.number("membrane.r");
  } else {
    const double t = c.number("membrane.t");
    if (!(t >= 0.0 && t <= 1.0)) throw CliError("config", "membrane.t must lie in [0, 1]");
    r = std::sqrt(1.0 - t * t);
  }
  return MembraneCoeffs::lossless(r, c.number("membrane.phase", kPi));
}

CavityModel read_model(const Config& c) {
  CavityModel m;
  m.length_l = c.number("cavity.length", 0.1);
  m.wavelength = c.number("cavity.wavelength", 1550e-9);
  m.mode_match_eps = c.number("cavity.mode_match", 1.0);
  m.mirror1 = read_mirror(c, "mirror1");
  m.mirror2 = read_mirror(c, "mirror2");
  if (!(m.length_l > 0.0) || !(m.wavelength > 0.0)) {
    throw CliError("config", "cavity.length and cavity.wavelength must be positive");
  }
  m.membrane = read_membrane(c, empty_mode_k(m.mode_index(), m.length_l));
  m.validate();
  return m;
}

MechanicalMode read_mechanics(const Config& c) {
  MechanicalMode mode;
  mode.mass_m = c.number("mechanics.mass", 1e-12);
  mode.omega_mech = c.number("mechanics.omega", 2 * kPi * 1e6);
  mode.x_zpf();
  return mode;
}

PolyStretch read_stretch(const Config& c, const std::string& prefix, double raw_min,
                         double raw_max, bool with_c0) {
  PolyStretch s;
  s.raw_min = c.number(prefix + "_raw_min", raw_min);
  s.raw_max = c.number(prefix + "_raw_max", raw_max);
  s.scale = c.number(prefix + "_scale");
  if (with_c0) s.c0 = c.number(prefix + "_c0", 0.0);
  s.c2 = c.number(prefix + "_c2", 0.0);
  s.c3 = c.number(prefix + "_c3", 0.0);
  s.c4 = c.number(prefix + "_c4", 0.0);
  s.validate();
  return s;
}

Json stretch_json(const PolyStretch& s) {
  return Json{{"raw_min", s.raw_min}, {"raw_max", s.raw_max}, {"scale", s.scale},
              {"c0", s.c0},           {"c2", s.c2},           {"c3", s.c3},
              {"c4", s.c4}};
}

Json matrix_json(const std::vector<std::vector<double>>& m) {
  Json a = Json::array();
  for (const auto& row : m) a.push_back(row);
  return a;
}

Json fit_json(const std::string& kind, const FitResult& f) {
  Json params = Json::array();
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    params.push_back(Json{{"name", f.names[i]},
                          {"value", f.values[i]},
                          {"uncertainty", f.uncertainties[i]},
                          {"fixed", static_cast<bool>(f.fixed[i])}});
  }
  Json extras = Json::object();
  for (const auto& [k, v] : f.extras) extras[k] = v;
  return Json{{"kind", kind},
              {"status", f.status},
              {"converged", f.converged},
              {"iterations", f.iterations},
              {"chi2", f.chi2},
              {"reduced_chi2", f.reduced_chi2},
              {"dof", f.dof},
              {"gradient_norm", f.gradient_norm},
              {"condition_number", f.condition_number},
              {"parameters", params},
              {"free_parameters", f.free_names},
              {"covariance", matrix_json(f.covariance)},
              {"correlation", matrix_json(f.correlation)},
              {"warnings", warnings_json(f.warnings)},
              {"extras", extras}};
}

int finish_fit(const FitResult& f) {
  report(f.warnings, "fit");
  if (f.warnings.has(Warning::kNonMonotoneStretch)) {
    throw CliError("invalid-fit", f.status, kExitNoConvergence);
  }
  if (!f.converged) {
    throw CliError("fit-nonconvergence", "fit stopped: " + f.status, kExitNoConvergence);
  }
  return kExitOk;
}

FitOptions read_fit_options(const Config& c) {
  FitOptions o;
  o.max_iterations = c.integer("fit.max_iterations", o.max_iterations);
  o.gradient_tol = c.number("fit.gradient_tol", o.gradient_tol);
  if (o.max_iterations < 1) throw CliError("config", "fit.max_iterations must be at least 1");
  if (!(o.gradient_tol > 0.0)) throw CliError("config", "fit.gradient_tol must be positive");
  return o;
}

std::filesystem::path fit_input(const Config& c, const RunOptions& run) {
  if (!run.input.empty()) {
    c.text("fit.input", "");
    return run.input;
  }
  return c.resolve_path(c.text("fit.input"));
}

// ------------------------------------------------------------- spectrum

enum class Axis { kLaser, kBackstop };

int spectrum(const Config& c, const RunOptions& run) {
  const CavityModel model = read_model(c);
  const int n = model.mode_index();
  const std::vector<double> xs = read_grid(c, "spectrum.x", 101);
  const Axis axis = choose<Axis>(c, "spectrum.axis", "laser",
                                 {{"laser", Axis::kLaser}, {"backstop", Axis::kBackstop}});
  std::vector<double> delta_l;
  std::vector<double> detunings;
  if (axis == Axis::kLaser) {
    detunings = read_grid(c, "spectrum.detuning", 201);
  } else {
    delta_l = read_grid(c, "spectrum.delta_l", 201);
    const double k = empty_mode_k(n, model.length_l);
    for (double dl : delta_l) detunings.push_back(backstop_detuning(dl, k, model.length_l));
    if (detunings.size() > 1 && detunings.front() > detunings.back()) {
      std::reverse(detunings.begin(), detunings.end());
      std::reverse(delta_l.begin(), delta_l.end());
    }
  }
  const auto method = choose<SweepMethod>(
      c, "spectrum.sweep_method", "direct",
      {{"direct", SweepMethod::kDirect}, {"lorentzian", SweepMethod::kLorentzian}});
  std::vector<double> sweep_x = xs;
  if (c.has("spectrum.sweep_x_min")) sweep_x = read_grid(c, "spectrum.sweep_x", 101);
  c.reject_unused();

  ensure_directory(run.out_dir);
  spdlog::info("spectrum: {} x {} map, mode {}", xs.size(), detunings.size(), n);
  const SpectrumMap map = spectrum_map(model, xs, detunings, run.threads);
  report(map.warnings, "spectrum");
  {
    std::vector<std::string> header = {"x", "detuning", "R"};
    if (axis == Axis::kBackstop) header.push_back("delta_l");
    CsvWriter out(run.out_dir / "map.csv", header);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (std::size_t j = 0; j < detunings.size(); ++j) {
        out << xs[i] << detunings[j] << map.values[i][j];
        if (axis == Axis::kBackstop) out << delta_l[j];
        out.end_row();
      }
    }
    out.close();
  }
  if (model.mode_match_eps == 0.0) {
    spdlog::warn("spectrum: mode matching is zero, no dip to sweep; sweep.csv not written");
    return kExitOk;
  }
  spdlog::info("spectrum: sweeping {} positions", sweep_x.size());
  const auto sweep = position_sweep(model, sweep_x, method, run.threads);
  CsvWriter out(run.out_dir / "sweep.csv", {"x", "kappa", "R_res", "center"});
  for (const auto& p : sweep) {
    out << p.x << p.kappa << p.reflection << p.center;
    out.end_row();
  }
  out.close();
  return kExitOk;
}

// ------------------------------------------------------------ couplings

int couplings(const Config& c, const RunOptions& run) {
  const CavityModel model = read_model(c);
  const MechanicalMode mode = read_mechanics(c);
  const auto placement = choose<Placement>(c, "couplings.placement", "mate",
                                           {{"mim", Placement::kMim},
                                            {"mate", Placement::kMateInput},
                                            {"backstop", Placement::kMateBackstop}});
  const auto method = choose<DerivativeMethod>(
      c, "couplings.method", "analytic",
      {{"analytic", DerivativeMethod::kAnalytic}, {"numeric", DerivativeMethod::kNumeric}});
  const int branch = c.integer("couplings.branch", model.mode_index());
  const std::vector<double> dxs = read_grid(c, "couplings.dx", 201);
  const double threshold = c.number("couplings.g1_threshold", 1e-3);
  const bool maxima = c.boolean("couplings.maxima", true);
  c.reject_unused();
  if (branch < 1) throw CliError("config", "couplings.branch must be >= 1");

  ensure_directory(run.out_dir);
  const double l = model.length_l;
  const CouplingGeometry geometry =
      placement == Placement::kMim ? CouplingGeometry::kMim : CouplingGeometry::kMate;
  const auto extrema = extremal_couplings(model.membrane, l, branch, geometry);
  double g1_scale = 0.0;
  for (const auto& e : extrema) {
    if (e.kind == ExtremumKind::kG1Max) g1_scale = std::max(g1_scale, std::abs(e.value));
  }

  std::vector<CouplingReport> rows(dxs.size());
  Warnings warnings;
  for (std::size_t i = 0; i < dxs.size(); ++i) {
    rows[i] = coupling_report(dxs[i], branch, model.membrane, model.mirror1, model.mirror2, l,
                              mode, placement, method);
    warnings |= rows[i].warnings;
  }
  report(warnings, "couplings");
  {
    CsvWriter out(run.out_dir / "couplings.csv",
                  {"dx", "G1", "G2", "kappa", "B", "A1", "A2", "pure_quadratic"});
    for (const auto& r : rows) {
      const bool pure = std::abs(r.g1) <= threshold * g1_scale;
      out << r.dx << r.g1 << r.g2 << r.kappa << r.b_tilde << r.a1_tilde << r.a2_tilde
          << (pure ? 1 : 0);
      out.end_row();
    }
    out.close();
  }

  Json ext = Json::array();
  for (const auto& e : extrema) {
    ext.push_back(Json{{"kind", e.kind == ExtremumKind::kG1Max ? "G1" : "G2"},
                       {"dx", e.dx},
                       {"value", e.value}});
  }
  Json pure = Json::array();
  if (geometry == CouplingGeometry::kMate) {
    for (double dx : pure_quadratic_points(model.membrane, branch, l)) pure.push_back(dx);
  }
  Json pure_b = Json::array();
  for (const auto& p : pure_point_dissipative(model.membrane, mode, l, branch, placement)) {
    pure_b.push_back(Json{{"dx", p.dx}, {"B", p.b_tilde}});
  }
  const double t_mag = resolve(model.membrane, empty_mode_k(branch, l)).t_mag;
  const EnhancementRatios lim = enhancement_limits(t_mag);
  auto ratios_json = [](const EnhancementRatios& r) {
    return Json{{"G1", r.g1}, {"G2", r.g2}, {"B", r.b_tilde}, {"A2", r.a2_tilde}};
  };
  Json doc{{"placement", c.text("couplings.placement", "mate")},
           {"branch", branch},
           {"t_m", t_mag},
           {"x_zpf", mode.x_zpf()},
           {"extrema", ext},
           {"pure_quadratic_points", pure},
           {"pure_point_B", pure_b},
           {"limit_ratios", ratios_json(lim)}};
  if (maxima) {
    spdlog::info("couplings: measuring MIM and MATE maxima");
    const MeasuredMaxima m = measure_maxima(model.membrane, model.mirror1, l, branch, mode);
    doc["maxima"] = Json{{"mim", ratios_json(m.mim)},
                         {"mate", ratios_json(m.mate)},
                         {"A1_mim", m.a1_mim},
                         {"A1_mate", m.a1_mate}};
    doc["ratios"] = ratios_json(m.ratios);
  }
  write_json(run.out_dir / "extrema.json", doc);
  return kExitOk;
}

// ----------------------------------------------------------- resonances

int resonances(const Config& c, const RunOptions& run) {
  const CavityModel model = read_model(c);
  const int branch = c.integer("resonances.branch", model.mode_index());
  const std::vector<double> xs = read_grid(c, "resonances.x", 201);
  c.reject_unused();
  if (branch < 1) throw CliError("config", "resonances.branch must be >= 1");

  ensure_directory(run.out_dir);
  const double l = model.length_l;
  const auto sols = trace_branch(xs, branch, model.membrane, model.mirror1, model.mirror2, l);
  Warnings warnings;
  CsvWriter out(run.out_dir / "resonances.csv",
                {"x", "k", "detuning", "kappa", "residual", "detuning_mim", "detuning_mate"});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& s = sols[i];
    warnings |= s.warnings;
    out << xs[i] << s.wavenumber_k << kSpeedOfLight * s.offset_k << s.kappa << s.residual
        << mim_detuning(xs[i] - 0.5 * l, branch, model.membrane, l)
        << mate_detuning(xs[i], branch, model.membrane, l);
    out.end_row();
  }
  out.close();
  report(warnings, "resonances");
  return kExitOk;
}

// ----------------------------------------------------------------- tilt

int tilt(const Config& c, const RunOptions& run) {
  const double lambda_ref = c.number("cavity.wavelength", 1550e-9);
  TiltedCavity cav;
  cav.mirror1 = read_mirror(c, "mirror1");
  cav.membrane = read_membrane(c, 2 * kPi / lambda_ref);
  if (c.has("tilt.mode_l") == c.has("tilt.x0")) {
    throw CliError("config", "tilt needs exactly one of tilt.x0, tilt.mode_l");
  }
  if (c.has("tilt.x0")) {
    cav.x0 = c.number("tilt.x0");
  } else {
    cav.x0 = peak_separation(c.integer("tilt.mode_l", 0), 2 * kPi / lambda_ref,
                             cav.mirror1.r_phase, cav.membrane);
  }
  cav.theta = c.number("tilt.theta", 0.0);
  cav.sigma = c.number("tilt.sigma", 100e-6);
  if (c.has("tilt.phi")) cav.phi = c.number("tilt.phi");
  const auto method = choose<TiltMethod>(
      c, "tilt.method", "analytic",
      {{"analytic", TiltMethod::kAnalytic}, {"quadrature", TiltMethod::kQuadrature}});
  const std::vector<double> grid = read_grid(c, "tilt.lambda", 401);
  const bool flexure = c.has("flexure.roc");
  const double roc = flexure ? c.number("flexure.roc") : 0.0;
  const double offset = flexure ? c.number("flexure.offset") : 0.0;
  c.reject_unused();
  cav.validate();

  ensure_directory(run.out_dir);
  const auto spec = wavelength_spectrum(cav, grid, method, run.threads);
  report(spec.warnings, "tilt");
  CsvWriter out(run.out_dir / "tilt.csv", {"lambda", "p_t"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << grid[i] << spec.value[i];
    out.end_row();
  }
  out.close();
  const double k_max = 2 * kPi / grid.front();
  Json doc{{"x0", cav.x0},
           {"theta", cav.theta},
           {"sigma", cav.sigma},
           {"k_theta_sigma_max", k_max * std::abs(cav.theta) * cav.sigma},
           {"warnings", warnings_json(spec.warnings)}};
  if (flexure) {
    doc["flexure"] = Json{{"roc", roc}, {"offset", offset}, {"sagitta", flexure_sagitta(roc, offset)}};
  }
  write_json(run.out_dir / "tilt.json", doc);
  return kExitOk;
}

// ------------------------------------------------------------------ fit

int fit_map(const Config& c, const RunOptions& run) {
  const auto table = read_csv(fit_input(c, run),
                              {"piezo_x_raw", "piezo_L_raw", "mode_id", "detuning_raw"});
  const std::size_t cx = table.column("piezo_x_raw");
  const std::size_t cl = table.column("piezo_L_raw");
  const std::size_t cm = table.column("mode_id");
  const std::size_t cd = table.column("detuning_raw");
  std::vector<MapPoint> data;
  double x_lo = 0, x_hi = 0, l_lo = 0, l_hi = 0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r[cm] != std::floor(r[cm])) {
      throw CliError("schema", table.path.string() + ":" + std::to_string(table.line_numbers[i]) +
                                   ": mode_id must be an integer");
    }
    data.push_back({r[cx], r[cl], static_cast<int>(r[cm]), r[cd]});
    x_lo = i ? std::min(x_lo, r[cx]) : r[cx];
    x_hi = i ? std::max(x_hi, r[cx]) : r[cx];
    l_lo = i ? std::min(l_lo, r[cl]) : r[cl];
    l_hi = i ? std::max(l_hi, r[cl]) : r[cl];
  }
  MapFitConfig fc;
  fc.length_l = c.number("cavity.length", 0.1);
  fc.wavelength = c.number("cavity.wavelength", 1550e-9);
  fc.convention = choose<MembraneConvention>(c, "map_fit.convention", "thin",
                                             {{"thin", MembraneConvention::kThin},
                                              {"slab", MembraneConvention::kSlab},
                                              {"reflectivity", MembraneConvention::kReflectivity}});
  fc.index_n = c.number("map_fit.index_n", 2.0);
  fc.d_init = c.number("map_fit.d_init", 88e-9);
  fc.r_init = c.number("map_fit.r_init", 0.4);
  fc.r_phase = c.number("map_fit.r_phase", kPi);
  fc.x_stretch = read_stretch(c, "map_fit.x", x_lo, x_hi, true);
  fc.l_stretch = read_stretch(c, "map_fit.l", l_lo, l_hi, false);
  fc.options = read_fit_options(c);
  c.reject_unused();

  ensure_directory(run.out_dir);
  const MapFit mf = fit_resonance_map(data, fc);
  Json doc = fit_json("map", mf.fit);
  doc["membrane"] = Json{{"r_mag", mf.membrane.r_mag}, {"r_phase", mf.membrane.r_phase}};
  doc["x_stretch"] = stretch_json(mf.x_stretch);
  doc["l_stretch"] = stretch_json(mf.l_stretch);
  write_json(run.out_dir / "fit.json", doc);
  CsvWriter out(run.out_dir / "residuals.csv", {"mode_id", "piezo_x_raw", "residual"});
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data[i].mode_id << data[i].piezo_x_raw << mf.fit.residuals[i];
    out.end_row();
  }
  out.close();
  return finish_fit(mf.fit);
}

int fit_loss(const Config& c, const RunOptions& run) {
  const auto table =
      read_csv(fit_input(c, run), {"x_m", "kappa_rad_s", "r_res", "sigma_kappa", "sigma_r"});
  std::vector<LossPoint> data;
  for (const auto& r : table.rows) {
    data.push_back({r[table.column("x_m")], r[table.column("kappa_rad_s")],
                    r[table.column("r_res")], r[table.column("sigma_kappa")],
                    r[table.column("sigma_r")]});
  }
  LossFitConfig lc;
  lc.model = read_model(c);
  lc.threads = run.threads;
  lc.options = read_fit_options(c);
  c.reject_unused();

  ensure_directory(run.out_dir);
  const LossFit lf = fit_loss_budget(data, lc);
  Json doc = fit_json("loss", lf.fit);
  doc["finesse_bound"] = lf.finesse_bound;
  write_json(run.out_dir / "fit.json", doc);
  CsvWriter out(run.out_dir / "residuals.csv", {"x_m", "kappa_residual", "r_residual"});
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data[i].x << lf.fit.residuals[2 * i] << lf.fit.residuals[2 * i + 1];
    out.end_row();
  }
  out.close();
  return finish_fit(lf.fit);
}

int fit_transmission(const Config& c, const RunOptions& run) {
  const auto table = read_csv(fit_input(c, run), {"mode_l", "lambda_m", "p_t", "sigma"});
  std::vector<TransmissionPoint> data;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const double ord = r[table.column("mode_l")];
    if (ord != std::floor(ord)) {
      throw CliError("schema", table.path.string() + ":" + std::to_string(table.line_numbers[i]) +
                                   ": mode_l must be an integer");
    }
    data.push_back({static_cast<int>(ord), r[table.column("lambda_m")], r[table.column("p_t")],
                    r[table.column("sigma")]});
  }
  TransmissionFitConfig tc;
  tc.phi1 = c.number("transmission_fit.phi1", kPi);
  tc.membrane = read_membrane(c, 2 * kPi / c.number("cavity.wavelength", 1550e-9));
  tc.beam_sigma = c.number("transmission_fit.beam_sigma", tc.beam_sigma);
  tc.l0_min = c.integer("transmission_fit.l0_min", tc.l0_min);
  tc.l0_max = c.integer("transmission_fit.l0_max", tc.l0_max);
  tc.min_l = c.integer("transmission_fit.min_l", tc.min_l);
  tc.r1_sq_init = c.number("transmission_fit.r1_sq_init", tc.r1_sq_init);
  tc.theta0_init = c.number("transmission_fit.theta0_init", tc.theta0_init);
  tc.a_init = c.number("transmission_fit.a_init", tc.a_init);
  tc.threads = run.threads;
  tc.options = read_fit_options(c);
  c.reject_unused();

  ensure_directory(run.out_dir);
  spdlog::info("fit transmission: scanning l0 in [{}, {}]", tc.l0_min, tc.l0_max);
  const TransmissionFit tf = fit_transmission_global(data, tc);
  Json doc = fit_json("transmission", tf.fit);
  doc["l0"] = tf.l0;
  doc["ambiguous_l0"] = tf.fit.warnings.has(Warning::kAmbiguousL0);
  doc["near_ties"] = tf.near_ties;
  Json scan = Json::array();
  for (const auto& [l0, chi2] : tf.chi2_scan) scan.push_back(Json{{"l0", l0}, {"chi2", chi2}});
  doc["chi2_scan"] = scan;
  Json spectra = Json::array();
  for (std::size_t i = 0; i < tf.ordinals.size(); ++i) {
    const int ord = tf.ordinals[i];
    spectra.push_back(Json{{"ordinal", ord},
                           {"mode_l", tf.l0 - ord},
                           {"lambda_peak", tf.fit.value("lambda_" + std::to_string(ord))},
                           {"x0", tf.x0[i]},
                           {"theta", tf.theta[i]}});
  }
  doc["spectra"] = spectra;
  write_json(run.out_dir / "fit.json", doc);

  // Residual order follows the fit: kept spectra by ordinal, then wavelength.
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (std::count(tf.ordinals.begin(), tf.ordinals.end(), data[i].ordinal)) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (data[a].ordinal != data[b].ordinal) return data[a].ordinal < data[b].ordinal;
    return data[a].lambda < data[b].lambda;
  });
  CsvWriter out(run.out_dir / "residuals.csv", {"mode_l", "lambda_m", "residual"});
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out << data[idx[j]].ordinal << data[idx[j]].lambda << tf.fit.residuals[j];
    out.end_row();
  }
  out.close();
  return finish_fit(tf.fit);
}

// ---------------------------------------------------------------- synth

int synth_loss(const Config& c, const RunOptions& run) {
  const CavityModel truth = read_model(c);
  const std::vector<double> xs = read_grid(c, "synth_loss.x", 40);
  const double noise = c.number("synth_loss.relative_noise", 0.01);
  c.reject_unused();
  ensure_directory(run.out_dir);
  const auto data = synth_loss_data(truth, xs, noise, run.seed, run.threads);
  CsvWriter out(run.out_dir / "loss.csv", {"x_m", "kappa_rad_s", "r_res", "sigma_kappa", "sigma_r"});
  for (const auto& p : data) {
    out << p.x << p.kappa << p.r_res << p.sigma_kappa << p.sigma_r;
    out.end_row();
  }
  out.close();
  return kExitOk;
}

int synth_map(const Config& c, const RunOptions& run) {
  MapSynthConfig sc;
  sc.length_l = c.number("cavity.length", 0.1);
  sc.wavelength = c.number("cavity.wavelength", 1550e-9);
  sc.membrane = read_membrane(c, empty_mode_k(nearest_mode_index(sc.wavelength, sc.length_l),
                                              sc.length_l));
  sc.thin_convention = c.boolean("synth_map.thin_convention", false);
  sc.exact_root = c.boolean("synth_map.exact_root", true);
  sc.modes = c.integer("synth_map.modes", 3);
  sc.points_per_mode = c.integer("synth_map.points_per_mode", 60);
  sc.noise = c.number("synth_map.noise", 0.0);
  sc.x_stretch = read_stretch(c, "synth_map.x", 0.0, 100.0, true);
  sc.l_stretch = read_stretch(c, "synth_map.l", 0.0, 100.0, false);
  c.reject_unused();
  sc.seed = run.seed;
  ensure_directory(run.out_dir);
  const auto data = synth_resonance_map(sc);
  CsvWriter out(run.out_dir / "map.csv", {"piezo_x_raw", "piezo_L_raw", "mode_id", "detuning_raw"});
  for (const auto& p : data) {
    out << p.piezo_x_raw << p.piezo_l_raw << p.mode_id << p.detuning_raw;
    out.end_row();
  }
  out.close();
  return kExitOk;
}

int synth_transmission_cmd(const Config& c, const RunOptions& run) {
  TransmissionSynthConfig sc;
  sc.membrane = read_membrane(c, 2 * kPi / c.number("cavity.wavelength", 1550e-9));
  sc.l0 = c.integer("synth_transmission.l0", sc.l0);
  sc.r1_sq = c.number("synth_transmission.r1_sq", sc.r1_sq);
  sc.theta0 = c.number("synth_transmission.theta0", sc.theta0);
  sc.a = c.number("synth_transmission.a", sc.a);
  sc.phi1 = c.number("synth_transmission.phi1", sc.phi1);
  sc.beam_sigma = c.number("synth_transmission.beam_sigma", sc.beam_sigma);
  sc.spectra = c.integer("synth_transmission.spectra", sc.spectra);
  sc.lambda_min = c.number("synth_transmission.lambda_min", sc.lambda_min);
  sc.lambda_max = c.number("synth_transmission.lambda_max", sc.lambda_max);
  sc.points = c.integer("synth_transmission.points", sc.points);
  sc.relative_noise = c.number("synth_transmission.relative_noise", 0.01);
  c.reject_unused();
  sc.seed = run.seed;
  ensure_directory(run.out_dir);
  const auto data = synth_transmission(sc);
  CsvWriter out(run.out_dir / "transmission.csv", {"mode_l", "lambda_m", "p_t", "sigma"});
  for (const auto& p : data) {
    out << p.ordinal << p.lambda << p.p_t << p.sigma;
    out.end_row();
  }
  out.close();
  return kExitOk;
}

}  // namespace

int cmd_spectrum(const Config& config, const RunOptions& run) { return spectrum(config, run); }
int cmd_couplings(const Config& config, const RunOptions& run) { return couplings(config, run); }
int cmd_resonances(const Config& config, const RunOptions& run) { return resonances(config, run); }
int cmd_tilt(const Config& config, const RunOptions& run) { return tilt(config, run); }

int cmd_fit(const std::string& kind, const Config& config, const RunOptions& run) {
  if (kind == "map") return fit_map(config, run);
  if (kind == "loss") return fit_loss(config, run);
  if (kind == "transmission") return fit_transmission(config, run);
  throw CliError("usage", "fit kind must be map, loss or transmission");
}

int cmd_synth(const std::string& kind, const Config& config, const RunOptions& run) {
  if (kind == "map") return synth_map(config, run);
  if (kind == "loss") return synth_loss(config, run);
  if (kind == "transmission") return synth_transmission_cmd(config, run);
  throw CliError("usage", "synth kind must be map, loss or transmission");
}

}  // namespace mateoptix::cli
