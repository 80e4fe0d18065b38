#include "chplsim/el.hpp"

#include "chplsim/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace chplsim {

namespace {

// Owen's pseudo-logarithm: log z for z >= z0, second-order Taylor
// extension below, which keeps the dual objective finite and concave on
// all of R^d.
struct PseudoLog {
  double z0;
  explicit PseudoLog(double z0_) : z0(z0_) {}
  double val(double z) const {
    if (z >= z0) return std::log(z);
    const double d = (z - z0) / z0;
    return std::log(z0) + d - 0.5 * d * d;
  }
  double d1(double z) const {
    if (z >= z0) return 1.0 / z;
    return (2.0 - z / z0) / z0;
  }
  double d2(double z) const {
    if (z >= z0) return -1.0 / (z * z);
    return -1.0 / (z0 * z0);
  }
};

double objective(const Eigen::MatrixXd& psi, const Eigen::VectorXd& lambda,
                 const PseudoLog& plog) {
  const Eigen::VectorXd z =
      (psi * lambda).array() + 1.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) s += plog.val(z(i));
  return s;
}

}  // namespace

ELResult solve_lambda(const MomentMatrix& psi_mat, const ELOptions& opts) {
  const Eigen::MatrixXd& psi = psi_mat.psi;
  const Eigen::Index n = psi.rows();
  const Eigen::Index d = psi.cols();
  if (n <= d)
    throw NumericalError("solve_lambda: under-determined, n_eff = " +
                         std::to_string(n) + " <= d = " + std::to_string(d));
  if (!psi.allFinite()) throw DataError("solve_lambda: non-finite moment row");

  // Assumption-2 check: the second-moment matrix must have full rank.
  {
    const Eigen::MatrixXd s = psi.transpose() * psi / double(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    const double emax = es.eigenvalues().maxCoeff();
    const double emin = es.eigenvalues().minCoeff();
    if (!(emax > 0.0) || emin <= emax * 1e-13)
      throw NumericalError("solve_lambda: degenerate moment variance matrix");
  }

  const double psi_row_max = psi.rowwise().norm().maxCoeff();
  const double lambda_cap = 1e8 / psi_row_max;
  const PseudoLog plog(1.0 / double(n));

  ELResult res;
  res.df = int(d);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(d);
  double fval = 0.0;
  bool hull_violation = false;
  bool converged = false;
  int iter = 0;

  Eigen::VectorXd grad(d);
  Eigen::MatrixXd hess(d, d);
  for (; iter < opts.max_iter; ++iter) {
    const Eigen::VectorXd z = (psi * lambda).array() + 1.0;
    grad.setZero();
    hess.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w1 = plog.d1(z(i));
      const double w2 = plog.d2(z(i));
      grad.noalias() += psi.row(i).transpose() * w1;
      hess.noalias() += (psi.row(i).transpose() * psi.row(i)) * w2;
    }
    if ((grad / double(n)).cwiseAbs().maxCoeff() <= opts.tol) {
      converged = true;
      break;
    }
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);
    const double slope = grad.dot(step);
    // Absolute slack keeps the backtracking meaningful in the endgame,
    // where the predicted improvement drops below objective rounding.
    const double slack = 1e-12 * (1.0 + std::fabs(fval));
    double s = 1.0;
    bool moved = false;
    while (s >= 1e-16) {
      const Eigen::VectorXd cand = lambda + s * step;
      const double fcand = objective(psi, cand, plog);
      if (fcand >= fval + 1e-4 * s * slope - slack) {
        lambda = cand;
        fval = fcand;
        moved = true;
        break;
      }
      s *= 0.5;
    }
    if (lambda.norm() > lambda_cap) {
      hull_violation = true;
      break;
    }
    if (!moved) break;  // line search stalled; treat per gradient below
  }

  const Eigen::VectorXd z = (psi * lambda).array() + 1.0;
  if (converged && z.minCoeff() <= 0.0) hull_violation = true;

  res.lambda = lambda;
  res.iterations = iter;
  if (hull_violation) {
    res.status = ELStatus::HullViolation;
    res.ell_n = std::numeric_limits<double>::infinity();
    res.wilks = std::numeric_limits<double>::infinity();
    res.p_value = 0.0;
    res.weights = Eigen::VectorXd::Zero(n);
    return res;
  }

  res.status = converged ? ELStatus::Converged : ELStatus::MaxIter;
  res.ell_n = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) res.ell_n += std::log(z(i));
  res.wilks = 2.0 * res.ell_n;
  res.p_value = chi2_sf(res.wilks, res.df);
  res.weights = (double(n) * z.array()).inverse();
  return res;
}

namespace {

// Regularized lower incomplete gamma P(a, x) by its power series.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by Lentz's continued
// fraction; accurate for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double frac = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    frac *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return frac * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double chi2_sf(double x, int df) {
  if (df < 1) throw std::domain_error("chi2_sf: df must be >= 1");
  if (std::isnan(x)) throw std::domain_error("chi2_sf: x is NaN");
  if (x < 0.0) throw std::domain_error("chi2_sf: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double a = 0.5 * double(df);
  const double xs = 0.5 * x;
  if (xs < a + 1.0) return 1.0 - gamma_p_series(a, xs);
  return gamma_q_cf(a, xs);
}

ELResult wilks_test(const Series& series, const Theta& theta0,
                    const ModelSpec& spec, const KernelConfig& cfg,
                    EtaMode mode, const OracleInputs& oracle,
                    const ELOptions& opts) {
  spec.validate();
  EtaProfile eta;
  if (mode == EtaMode::Estim) {
    // Leave-one-out profiling removes the self-fitting shrinkage of the
    // residuals; isolated points are guarded in the moment construction.
    eta = estimate_eta(series, theta0, spec, cfg, /*leave_one_out=*/true);
  } else {
    if (oracle.train == nullptr)
      throw ConfigError("wilks_test: oracle mode needs a training sample");
    eta = oracle_eta(series, theta0, spec, *oracle.train, oracle.density, cfg);
  }
  const MomentMatrix psi = build_moments(series, theta0, eta, spec);
  return solve_lambda(psi, opts);
}

}  // namespace chplsim
