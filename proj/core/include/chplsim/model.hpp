#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace chplsim {

enum class Family { PLSIM, CHPLSIM };

enum class Identification { FixFirst, UnitNorm };

enum class LinearForm { Linear };  // l(x; g1) = x' g1, so d1 = d_X

// Built-in conditional variance designs, both linear in beta:
//   ArchLag1:  sigma^2 = b1 + b2 * y_{i-1}^2
//   LogSquare: sigma^2 = b1 + b2 * ln(max(y_{i-1}^2, 1))
enum class VarianceForm { None, ArchLag1, LogSquare };

// Declarative description of a PLSIM / CHPLSIM instance.
struct ModelSpec {
  Family family = Family::PLSIM;
  int d_X = 0;
  int d_W = 2;
  int d_beta = 0;
  int r = 0;  // lag depth of the variance regressor
  Identification identification = Identification::FixFirst;
  LinearForm linear_form = LinearForm::Linear;
  VarianceForm variance_form = VarianceForm::None;

  int d1() const { return d_X; }
  int d_gamma() const { return d1() + d_W; }
  // Number of moment conditions: (d1 + d_W - 1) + d_beta.
  int moment_dim() const { return d1() + d_W - 1 + d_beta; }

  // Throws ConfigError when the invariants do not hold.
  void validate() const;

  static ModelSpec plsim(int d_X, int d_W,
                         Identification id = Identification::FixFirst);
  static ModelSpec chplsim(int d_X, int d_W, VarianceForm vf, int r = 1,
                           Identification id = Identification::FixFirst);
};

// Finite-dimensional parameter bundle. gamma2 is stored through its free
// parametrization gamma2_free (length d_W - 1); the full direction is
// materialized on demand per the spec's identification scheme.
struct Theta {
  Eigen::VectorXd gamma1;
  Eigen::VectorXd gamma2_free;
  Eigen::VectorXd beta;

  void validate(const ModelSpec& spec) const;
};

// Observed sample: response y, linear-part covariates x, index covariates w.
struct Series {
  Eigen::VectorXd y;
  Eigen::MatrixXd x;  // n x d_X
  Eigen::MatrixXd w;  // n x d_W

  Eigen::Index n() const { return y.size(); }

  // Throws DataError on row-count mismatch or non-finite entries.
  void validate() const;
};

// Full index direction gamma2 (length d_W).
// FixFirst: (1, g~'). UnitNorm: (sqrt(1 - |g~|^2), g~'), first entry >= 0.
Eigen::VectorXd materialize_gamma2(const Theta& theta, const ModelSpec& spec);

// d gamma2 / d gamma2_free, a d_W x (d_W - 1) matrix. Stored in the
// column-Jacobian orientation: downstream code applies its transpose to
// gradient columns, J' * grad.
Eigen::MatrixXd jacobian_gamma2(const Theta& theta, const ModelSpec& spec);

// Block-diagonal Jacobian of (gamma1, gamma2) with respect to the free
// parameters: (d1 + d_W) x (d1 + d_W - 1), identity on the gamma1 block.
Eigen::MatrixXd full_jacobian(const Theta& theta, const ModelSpec& spec);

// l(x; gamma1) for every row of x (Linear built-in: x * gamma1).
Eigen::VectorXd linear_part(const Series& series, const Theta& theta,
                            const ModelSpec& spec);

// sigma^2(...; beta) evaluated with the lagged response value y_prev.
double sigma2_value(const ModelSpec& spec, const Theta& theta, double y_prev);

// Gradient of sigma^2 in beta at lagged response y_prev; both built-ins are
// linear in beta so this does not depend on beta.
Eigen::VectorXd sigma2_grad(const ModelSpec& spec, double y_prev);

}  // namespace chplsim
