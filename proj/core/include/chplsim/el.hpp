#pragma once

#include "chplsim/kernel.hpp"
#include "chplsim/model.hpp"
#include "chplsim/moments.hpp"

#include <Eigen/Dense>

namespace chplsim {

enum class ELStatus { Converged, HullViolation, MaxIter };

struct ELResult {
  Eigen::VectorXd lambda;
  double ell_n = 0.0;   // sum of log(1 + lambda' psi_i)
  double wilks = 0.0;   // 2 * ell_n
  int df = 0;
  double p_value = 1.0;
  Eigen::VectorXd weights;  // pi_i = 1 / (n (1 + lambda' psi_i))
  ELStatus status = ELStatus::Converged;
  int iterations = 0;
};

struct ELOptions {
  double tol = 1e-10;  // max-norm of the mean gradient
  int max_iter = 100;
};

// Maximizes the concave dual sum(log*(1 + lambda' psi_i)) by damped
// Newton with backtracking, where log* extends log quadratically below
// 1/n_eff so iterates can never leave the domain. HullViolation (zero
// outside the convex hull of the rows) is reported with wilks = +inf and
// p_value = 0.
ELResult solve_lambda(const MomentMatrix& psi, const ELOptions& opts = {});

// Chi-squared survival function via the regularized incomplete gamma
// (series for x < df + 1, continued fraction otherwise).
double chi2_sf(double x, int df);

enum class EtaMode { Estim, Oracle };

struct OracleInputs {
  const Series* train = nullptr;
  IndexDensity density;
};

// Full test pipeline: nuisance profile -> moment rows -> EL solve.
// Estim mode smooths over the sample itself with leave-one-out sums;
// Oracle mode uses oracle_eta with the supplied training sample and
// density.
ELResult wilks_test(const Series& series, const Theta& theta0,
                    const ModelSpec& spec, const KernelConfig& cfg,
                    EtaMode mode = EtaMode::Estim,
                    const OracleInputs& oracle = {},
                    const ELOptions& opts = {});

}  // namespace chplsim
