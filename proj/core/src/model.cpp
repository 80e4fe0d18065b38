#include "chplsim/model.hpp"

#include "chplsim/error.hpp"

#include <cmath>
#include <string>

namespace chplsim {

void ModelSpec::validate() const {
  if (d_W < 2)
    throw ConfigError("ModelSpec: d_W must be >= 2, got " + std::to_string(d_W));
  if (d_X < 0) throw ConfigError("ModelSpec: d_X must be nonnegative");
  if (r < 0) throw ConfigError("ModelSpec: lag depth r must be nonnegative");
  if (family == Family::PLSIM) {
    if (d_beta != 0 || variance_form != VarianceForm::None)
      throw ConfigError("ModelSpec: PLSIM has no variance part");
  } else {
    if (variance_form == VarianceForm::None)
      throw ConfigError("ModelSpec: CHPLSIM requires a variance form");
    if (d_beta != 2)
      throw ConfigError("ModelSpec: built-in variance forms have d_beta = 2");
    if (r < 1)
      throw ConfigError("ModelSpec: built-in variance forms need r >= 1");
  }
  if (moment_dim() <= 0) throw ConfigError("ModelSpec: moment dimension not positive");
}

ModelSpec ModelSpec::plsim(int d_X, int d_W, Identification id) {
  ModelSpec spec;
  spec.family = Family::PLSIM;
  spec.d_X = d_X;
  spec.d_W = d_W;
  spec.identification = id;
  spec.validate();
  return spec;
}

ModelSpec ModelSpec::chplsim(int d_X, int d_W, VarianceForm vf, int r,
                             Identification id) {
  ModelSpec spec;
  spec.family = Family::CHPLSIM;
  spec.d_X = d_X;
  spec.d_W = d_W;
  spec.d_beta = 2;
  spec.r = r;
  spec.identification = id;
  spec.variance_form = vf;
  spec.validate();
  return spec;
}

void Theta::validate(const ModelSpec& spec) const {
  if (gamma1.size() != spec.d1())
    throw ConfigError("Theta: gamma1 has length " + std::to_string(gamma1.size()) +
                      ", expected " + std::to_string(spec.d1()));
  if (gamma2_free.size() != spec.d_W - 1)
    throw ConfigError("Theta: gamma2_free has length " +
                      std::to_string(gamma2_free.size()) + ", expected " +
                      std::to_string(spec.d_W - 1));
  if (beta.size() != spec.d_beta)
    throw ConfigError("Theta: beta has length " + std::to_string(beta.size()) +
                      ", expected " + std::to_string(spec.d_beta));
  if (spec.identification == Identification::UnitNorm &&
      gamma2_free.norm() > 1.0)
    throw std::domain_error("Theta: |gamma2_free| > 1 under unit-norm identification");
  if (!gamma1.allFinite() || !gamma2_free.allFinite() || !beta.allFinite())
    throw std::domain_error("Theta: non-finite parameter value");
}

void Series::validate() const {
  if (x.rows() != n() || w.rows() != n())
    throw DataError("Series: y, x, w row counts differ");
  if (!y.allFinite() || !x.allFinite() || !w.allFinite())
    throw DataError("Series: non-finite entry");
}

Eigen::VectorXd materialize_gamma2(const Theta& theta, const ModelSpec& spec) {
  const Eigen::Index k = theta.gamma2_free.size();
  Eigen::VectorXd g2(k + 1);
  switch (spec.identification) {
    case Identification::FixFirst:
      g2(0) = 1.0;
      break;
    case Identification::UnitNorm: {
      const double sq = 1.0 - theta.gamma2_free.squaredNorm();
      if (sq < 0.0)
        throw std::domain_error("materialize_gamma2: |gamma2_free| > 1");
      g2(0) = std::sqrt(sq);
      break;
    }
  }
  g2.tail(k) = theta.gamma2_free;
  return g2;
}

Eigen::MatrixXd jacobian_gamma2(const Theta& theta, const ModelSpec& spec) {
  const Eigen::Index k = theta.gamma2_free.size();
  Eigen::MatrixXd jac(k + 1, k);
  switch (spec.identification) {
    case Identification::FixFirst:
      jac.row(0).setZero();
      break;
    case Identification::UnitNorm: {
      const double sq = 1.0 - theta.gamma2_free.squaredNorm();
      if (sq <= 0.0)
        throw NumericalError("jacobian_gamma2: singular at |gamma2_free| >= 1");
      jac.row(0) = -theta.gamma2_free.transpose() / std::sqrt(sq);
      break;
    }
  }
  jac.bottomRows(k) = Eigen::MatrixXd::Identity(k, k);
  return jac;
}

Eigen::MatrixXd full_jacobian(const Theta& theta, const ModelSpec& spec) {
  const int d1 = spec.d1();
  const Eigen::MatrixXd j2 = jacobian_gamma2(theta, spec);
  Eigen::MatrixXd jac =
      Eigen::MatrixXd::Zero(d1 + j2.rows(), d1 + j2.cols());
  jac.topLeftCorner(d1, d1).setIdentity();
  jac.bottomRightCorner(j2.rows(), j2.cols()) = j2;
  return jac;
}

Eigen::VectorXd linear_part(const Series& series, const Theta& theta,
                            const ModelSpec& spec) {
  (void)spec;  // only LinearForm::Linear is built in
  if (series.x.cols() != theta.gamma1.size())
    throw DataError("linear_part: x column count does not match gamma1");
  if (theta.gamma1.size() == 0)
    return Eigen::VectorXd::Zero(series.n());
  return series.x * theta.gamma1;
}

double sigma2_value(const ModelSpec& spec, const Theta& theta, double y_prev) {
  return theta.beta.dot(sigma2_grad(spec, y_prev));
}

Eigen::VectorXd sigma2_grad(const ModelSpec& spec, double y_prev) {
  Eigen::VectorXd grad(2);
  switch (spec.variance_form) {
    case VarianceForm::ArchLag1:
      grad << 1.0, y_prev * y_prev;
      return grad;
    case VarianceForm::LogSquare:
      grad << 1.0, std::log(std::max(y_prev * y_prev, 1.0));
      return grad;
    case VarianceForm::None:
      break;
  }
  throw ConfigError("sigma2_grad: model has no variance form");
}

}  // namespace chplsim
