#pragma once

#include "chplsim/kernel.hpp"
#include "chplsim/model.hpp"

#include <Eigen/Dense>

#include <functional>

namespace chplsim {

struct FitResult {
  Theta theta_hat;
  double sse = 0.0;
  Eigen::VectorXd residuals;
  int iterations = 0;  // objective evaluations spent
  bool converged = false;
};

struct FitOptions {
  double simplex_tol = 1e-6;  // stop when the simplex diameter shrinks below
  int max_evals = 2000;       // per simplex run; the search restarts once
  double init_step = 0.1;
};

// Profile least squares: minimize sum_i (y_i - l(x_i) - m_hat^(-i)(t_i))^2
// over (gamma1, gamma2_free), where m_hat is the leave-one-out kernel ratio
// eta_m / eta_f. Derivative-free simplex search restarted once from the
// best vertex.
FitResult profile_ls_fit(const Series& series, const ModelSpec& spec,
                         const KernelConfig& cfg, const Theta& init,
                         const FitOptions& opts = {});

// Default starting point: gamma1 from OLS of y on x, gamma2_free from the
// leading principal direction of w rescaled per the identification scheme.
Theta default_init(const Series& series, const ModelSpec& spec);

// OLS of squared residuals on the variance regressors (both built-in
// variance forms are linear in beta). Rows with fewer than r lags are
// dropped to match the moment convention.
Eigen::VectorXd variance_ls_fit(const Eigen::VectorXd& residuals,
                                const Series& series, const ModelSpec& spec);

// Generic Nelder-Mead simplex minimizer (reflection 1, expansion 2,
// contraction 0.5, shrink 0.5). Returns the best vertex found.
struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evals = 0;
  bool converged = false;
};
SimplexResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, double init_step, double diameter_tol,
    int max_evals);

}  // namespace chplsim
