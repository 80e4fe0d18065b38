#include "chplsim/fit.hpp"

#include "chplsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace chplsim {

namespace {

Theta unpack(const Eigen::VectorXd& v, const ModelSpec& spec,
             const Theta& shape) {
  Theta theta = shape;
  theta.gamma1 = v.head(spec.d1());
  theta.gamma2_free = v.segment(spec.d1(), spec.d_W - 1);
  return theta;
}

Eigen::VectorXd pack(const Theta& theta, const ModelSpec& spec) {
  Eigen::VectorXd v(spec.d1() + spec.d_W - 1);
  v.head(spec.d1()) = theta.gamma1;
  v.tail(spec.d_W - 1) = theta.gamma2_free;
  return v;
}

}  // namespace

SimplexResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, double init_step, double diameter_tol,
    int max_evals) {
  const int dim = int(start.size());
  const int nv = dim + 1;
  std::vector<Eigen::VectorXd> vertex(nv, start);
  std::vector<double> value(nv);
  int evals = 0;

  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  for (int k = 0; k < dim; ++k) vertex[k + 1](k) += init_step;
  for (int k = 0; k < nv; ++k) value[k] = eval(vertex[k]);

  std::vector<int> order(nv);
  SimplexResult res;
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return value[a] < value[b]; });
    const int best = order[0], worst = order[nv - 1], second = order[nv - 2];

    double diameter = 0.0;
    for (int k = 1; k < nv; ++k)
      diameter = std::max(diameter,
                          (vertex[order[k]] - vertex[best]).norm());
    if (diameter < diameter_tol) {
      res.converged = true;
      break;
    }
    if (evals >= max_evals) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int k = 0; k < nv; ++k)
      if (k != worst) centroid += vertex[k];
    centroid /= double(dim);

    const Eigen::VectorXd reflected =
        centroid + (centroid - vertex[worst]);
    const double f_ref = eval(reflected);
    if (f_ref < value[order[0]]) {
      const Eigen::VectorXd expanded =
          centroid + 2.0 * (centroid - vertex[worst]);
      const double f_exp = eval(expanded);
      if (f_exp < f_ref) {
        vertex[worst] = expanded;
        value[worst] = f_exp;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_ref;
      }
      continue;
    }
    if (f_ref < value[second]) {
      vertex[worst] = reflected;
      value[worst] = f_ref;
      continue;
    }
    const Eigen::VectorXd contracted =
        centroid + 0.5 * (vertex[worst] - centroid);
    const double f_con = eval(contracted);
    if (f_con < value[worst]) {
      vertex[worst] = contracted;
      value[worst] = f_con;
      continue;
    }
    for (int k = 0; k < nv; ++k) {  // shrink toward the best vertex
      if (k == best) continue;
      vertex[k] = vertex[best] + 0.5 * (vertex[k] - vertex[best]);
      value[k] = eval(vertex[k]);
    }
  }

  const int best =
      int(std::min_element(value.begin(), value.end()) - value.begin());
  res.x = vertex[best];
  res.value = value[best];
  res.evals = evals;
  return res;
}

FitResult profile_ls_fit(const Series& series, const ModelSpec& spec,
                         const KernelConfig& cfg, const Theta& init,
                         const FitOptions& opts) {
  spec.validate();
  series.validate();
  init.validate(spec);
  const Eigen::Index n = series.n();
  if (n < 10 * (spec.d1() + spec.d_W))
    throw DataError("profile_ls_fit: sample too small for profiling");

  auto objective = [&](const Eigen::VectorXd& v) -> double {
    Theta theta = unpack(v, spec, init);
    if (spec.identification == Identification::UnitNorm &&
        theta.gamma2_free.norm() >= 1.0)
      return std::numeric_limits<double>::infinity();
    EtaProfile eta;
    try {
      eta = estimate_eta(series, theta, spec, cfg, /*leave_one_out=*/true);
    } catch (const ConfigError&) {
      return std::numeric_limits<double>::infinity();
    }
    if ((eta.f.array() < 1e-12).all())
      throw NumericalError("profile_ls_fit: index density collapsed");
    const Eigen::VectorXd res = series.y - linear_part(series, theta, spec);
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double diff = res(i) - eta.m(i) / eta.f(i);
      sse += diff * diff;
    }
    return sse;
  };

  SimplexResult run =
      nelder_mead(objective, pack(init, spec), opts.init_step,
                  opts.simplex_tol, opts.max_evals);
  // One restart from the best point with a smaller initial step.
  SimplexResult rerun =
      nelder_mead(objective, run.x, 0.1 * opts.init_step, opts.simplex_tol,
                  opts.max_evals);
  const SimplexResult& best = rerun.value <= run.value ? rerun : run;

  FitResult fit;
  fit.theta_hat = unpack(best.x, spec, init);
  fit.sse = best.value;
  fit.iterations = run.evals + rerun.evals;
  fit.converged = rerun.converged;
  const EtaProfile eta =
      estimate_eta(series, fit.theta_hat, spec, cfg, /*leave_one_out=*/true);
  fit.residuals = series.y - linear_part(series, fit.theta_hat, spec) -
                  (eta.m.array() / eta.f.array()).matrix();
  return fit;
}

Theta default_init(const Series& series, const ModelSpec& spec) {
  Theta theta;
  const Eigen::Index n = series.n();

  if (spec.d1() > 0) {
    theta.gamma1 =
        series.x.colPivHouseholderQr().solve(series.y);
  } else {
    theta.gamma1.resize(0);
  }

  const Eigen::MatrixXd centered =
      series.w.rowwise() - series.w.colwise().mean();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / double(std::max<Eigen::Index>(n - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd direction = es.eigenvectors().col(spec.d_W - 1);
  if (direction(0) < 0.0) direction = -direction;

  switch (spec.identification) {
    case Identification::FixFirst:
      if (std::abs(direction(0)) < 1e-8)
        direction(0) = 1e-8;  // keep the rescaling finite
      theta.gamma2_free = direction.tail(spec.d_W - 1) / direction(0);
      break;
    case Identification::UnitNorm:
      direction.normalize();
      theta.gamma2_free = direction.tail(spec.d_W - 1);
      break;
  }
  theta.beta.resize(spec.d_beta);
  theta.beta.setZero();
  return theta;
}

Eigen::VectorXd variance_ls_fit(const Eigen::VectorXd& residuals,
                                const Series& series, const ModelSpec& spec) {
  if (spec.variance_form == VarianceForm::None)
    throw ConfigError("variance_ls_fit: model has no variance part");
  const Eigen::Index n = residuals.size();
  if (n != series.n())
    throw DataError("variance_ls_fit: residuals not aligned with series");
  const int r = std::max(spec.r, 1);
  if (n - r <= spec.d_beta)
    throw DataError("variance_ls_fit: too few rows after dropping lags");

  Eigen::MatrixXd design(n - r, spec.d_beta);
  Eigen::VectorXd response(n - r);
  for (Eigen::Index i = r; i < n; ++i) {
    design.row(i - r) = sigma2_grad(spec, series.y(i - 1)).transpose();
    response(i - r) = residuals(i) * residuals(i);
  }
  const auto qr = design.colPivHouseholderQr();
  if (qr.rank() < spec.d_beta)
    throw NumericalError("variance_ls_fit: collinear variance regressors");
  return qr.solve(response);
}

}  // namespace chplsim
