#include "mateoptix/lsq.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace mateoptix {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string snapshot(const std::vector<Parameter>& spec, const std::vector<double>& p) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) os << ", ";
    os << spec[i].name << "=" << p[i];
  }
  return os.str();
}

class Evaluator {
 public:
  explicit Evaluator(const FitProblem& problem) : problem_(problem) {}

  VectorXd operator()(const std::vector<double>& p) const {
    std::vector<double> r;
    problem_.residuals(p, r);
    if (r.empty()) fail(ErrorKind::kInvalidArgument, "residual evaluator returned no data");
    for (double v : r) {
      if (!std::isfinite(v)) {
        fail(ErrorKind::kNumerical,
             "non-finite residual at parameters {" + snapshot(problem_.parameters, p) + "}");
      }
    }
    return Eigen::Map<const VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  }

 private:
  const FitProblem& problem_;
};

}  // namespace

double FitResult::value(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  fail(ErrorKind::kInvalidArgument, "unknown fit parameter " + name);
}

double FitResult::uncertainty(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return uncertainties[i];
  }
  fail(ErrorKind::kInvalidArgument, "unknown fit parameter " + name);
}

FitResult least_squares_solve(const FitProblem& problem, const FitOptions& options) {
  const auto& spec = problem.parameters;
  std::vector<std::size_t> free;
  std::vector<double> p(spec.size());
  std::vector<double> scale(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const Parameter& q = spec[i];
    if (!std::isfinite(q.value) || q.value < q.lower || q.value > q.upper) {
      fail(ErrorKind::kInvalidArgument, "initial value of " + q.name + " outside its bounds");
    }
    p[i] = q.value;
    scale[i] = q.scale > 0 ? q.scale : (q.value != 0.0 ? std::abs(q.value) : 1.0);
    if (!q.fixed) free.push_back(i);
  }
  if (free.empty()) fail(ErrorKind::kInvalidArgument, "fit has no free parameters");
  const auto n = static_cast<Eigen::Index>(free.size());

  Evaluator eval(problem);
  VectorXd r = eval(p);
  const Eigen::Index m = r.size();
  double chi2 = r.squaredNorm();

  auto jacobian = [&](const std::vector<double>& at) {
    MatrixXd j(m, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      const std::size_t i = free[static_cast<std::size_t>(c)];
      double h = options.relative_step * std::max(std::abs(at[i]), scale[i]);
      std::vector<double> hi = at;
      std::vector<double> lo = at;
      double up = at[i] + h;
      double dn = at[i] - h;
      if (up > spec[i].upper) up = at[i];
      if (dn < spec[i].lower) dn = at[i];
      if (up == dn) fail(ErrorKind::kNumerical, "bounds too tight to differentiate " + spec[i].name);
      hi[i] = up;
      lo[i] = dn;
      // Scaled column: derivative with respect to p_i / scale_i.
      j.col(c) = (eval(hi) - eval(lo)) / (up - dn) * scale[i];
    }
    return j;
  };

  auto gradient_measure = [&](const MatrixXd& j, const VectorXd& res) {
    const double rn = res.norm();
    if (rn == 0.0) return 0.0;
    double worst = 0.0;
    const VectorXd g = j.transpose() * res;
    for (Eigen::Index c = 0; c < n; ++c) {
      const double cn = j.col(c).norm();
      if (cn > 0) worst = std::max(worst, std::abs(g(c)) / (cn * rn));
    }
    return worst;
  };

  FitResult out;
  MatrixXd j = jacobian(p);
  double lambda = 1e-3;
  double nu = 2.0;
  int iter = 0;
  bool converged = false;
  std::string status = "max-iterations";
  const double floor = options.chi2_floor * static_cast<double>(m);

  for (; iter < options.max_iterations; ++iter) {
    const double gm = gradient_measure(j, r);
    if (gm < options.gradient_tol || chi2 <= floor) {
      converged = true;
      status = chi2 <= floor ? "chi2-floor" : "gradient";
      break;
    }
    const MatrixXd a = j.transpose() * j;
    const VectorXd g = j.transpose() * r;
    VectorXd diag = a.diagonal();
    const double dmax = diag.maxCoeff();
    for (Eigen::Index c = 0; c < n; ++c) diag(c) = std::max(diag(c), 1e-12 * dmax + 1e-300);

    bool accepted = false;
    while (!accepted) {
      MatrixXd damped = a;
      damped.diagonal() += lambda * diag;
      const VectorXd step = damped.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= nu;
        nu *= 2;
        if (lambda > 1e20) break;
        continue;
      }
      std::vector<double> trial = p;
      VectorXd actual(n);
      for (Eigen::Index c = 0; c < n; ++c) {
        const std::size_t i = free[static_cast<std::size_t>(c)];
        trial[i] = std::clamp(p[i] + step(c) * scale[i], spec[i].lower, spec[i].upper);
        actual(c) = (trial[i] - p[i]) / scale[i];
      }
      const VectorXd rt = eval(trial);
      const double chi2_trial = rt.squaredNorm();
      const double predicted = -(2.0 * g.dot(actual) + actual.dot(a * actual));
      // Near the optimum the predicted gain drops below the resolution of
      // chi^2 itself; such steps are kept unless chi^2 visibly rises.
      const double resolution = 1e-10 * chi2;
      if (chi2_trial < chi2 || (predicted <= resolution && chi2_trial <= chi2 + resolution)) {
        const double rho = predicted > 0 ? std::clamp((chi2 - chi2_trial) / predicted, 0.0, 1.0) : 1.0;
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        lambda = std::max(lambda, 1e-15);
        nu = 2.0;
        p = trial;
        r = rt;
        chi2 = chi2_trial;
        accepted = true;
      } else {
        lambda *= nu;
        nu *= 2;
        if (lambda > 1e20) break;
      }
    }
    if (!accepted) {
      status = "stalled";
      converged = gradient_measure(j, r) < options.gradient_tol || chi2 <= floor;
      break;
    }
    j = jacobian(p);
  }
  if (iter == options.max_iterations) {
    converged = gradient_measure(j, r) < options.gradient_tol || chi2 <= floor;
  }

  out.iterations = iter;
  out.converged = converged;
  out.status = converged ? "converged (" + status + ")" : status;
  out.gradient_norm = gradient_measure(j, r);
  out.chi2 = chi2;
  out.dof = static_cast<int>(m - n);
  out.reduced_chi2 = out.dof > 0 ? chi2 / out.dof : 0.0;
  out.residuals.assign(r.data(), r.data() + m);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    out.names.push_back(spec[i].name);
    out.values.push_back(p[i]);
    out.fixed.push_back(spec[i].fixed);
  }

  // Covariance of the free parameters from the scaled normal matrix,
  // equilibrated so the condition number reflects correlations only.
  const MatrixXd a = j.transpose() * j;
  VectorXd d = a.diagonal().cwiseSqrt();
  std::vector<bool> dead(static_cast<std::size_t>(n), false);
  for (Eigen::Index c = 0; c < n; ++c) {
    if (!(d(c) > 0)) {
      dead[static_cast<std::size_t>(c)] = true;
      d(c) = 1.0;
    }
  }
  const MatrixXd b = d.asDiagonal().inverse() * a * d.asDiagonal().inverse();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(b);
  const VectorXd ev = es.eigenvalues();
  const double ev_max = ev.maxCoeff();
  const double ev_min = ev.minCoeff();
  out.condition_number =
      ev_min > 0 ? ev_max / ev_min : std::numeric_limits<double>::infinity();
  if (out.condition_number > 1e8) out.warnings |= Warning::kDegenerateParameters;

  const double cutoff = 1e-15 * ev_max;
  MatrixXd binv = MatrixXd::Zero(n, n);
  for (Eigen::Index e = 0; e < n; ++e) {
    const VectorXd v = es.eigenvectors().col(e);
    if (ev(e) > cutoff) {
      binv += v * v.transpose() / ev(e);
    } else {
      for (Eigen::Index c = 0; c < n; ++c) {
        if (std::abs(v(c)) > 1e-3) dead[static_cast<std::size_t>(c)] = true;
      }
    }
  }
  MatrixXd cov = d.asDiagonal().inverse() * binv * d.asDiagonal().inverse();
  for (Eigen::Index r0 = 0; r0 < n; ++r0) {
    for (Eigen::Index c = 0; c < n; ++c) {
      cov(r0, c) *= scale[free[static_cast<std::size_t>(r0)]] *
                    scale[free[static_cast<std::size_t>(c)]];
    }
  }
  if (!problem.sigma_given && out.dof > 0) cov *= out.reduced_chi2;

  out.uncertainties.assign(spec.size(), 0.0);
  out.covariance.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  out.correlation = out.covariance;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index r0 = 0; r0 < n; ++r0) {
    const auto ri = static_cast<std::size_t>(r0);
    out.free_names.push_back(spec[free[ri]].name);
    out.uncertainties[free[ri]] = dead[ri] ? nan : std::sqrt(std::max(cov(r0, r0), 0.0));
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      out.covariance[ri][ci] = cov(r0, c);
      const double den = std::sqrt(cov(r0, r0) * cov(c, c));
      out.correlation[ri][ci] = den > 0 ? cov(r0, c) / den : (r0 == c ? 1.0 : 0.0);
    }
  }
  return out;
}

}  // namespace mateoptix
