#pragma once

#include "chplsim/kernel.hpp"
#include "chplsim/model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace chplsim {

// Estimating-function rows. Rows needing r lags are dropped from the
// front; row_index maps each kept row back to its observation index.
struct MomentMatrix {
  Eigen::MatrixXd psi;  // n_eff x d
  std::vector<Eigen::Index> row_index;

  Eigen::Index n_eff() const { return psi.rows(); }
  Eigen::Index dim() const { return psi.cols(); }
};

// Mean residual y_i - l(x_i) - m_hat(t_i) with m_hat = eta_m / eta_f.
// Throws NumericalError when eta_f(t_i) = 0 (possible only for oracle
// densities with bounded support; the Gaussian kernel is positive).
double g_mu(const Series& series, const Theta& theta, const EtaProfile& eta,
            const ModelSpec& spec, Eigen::Index i);

// Variance residual g_mu^2 - sigma^2(...; beta), defined for i >= r.
double g_sigma(const Series& series, const Theta& theta,
               const EtaProfile& eta, const ModelSpec& spec, Eigen::Index i);

// The estimating function is defined up to a positive observation weight
// omega(V_i); two members of the family are built in.
//   Ratio:        omega = 1. Rows use the kernel-ratio conditional
//                 expectations directly; this is the production choice for
//                 the EL test (it reproduces the published rejection
//                 rates). Under a leave-one-out profile, observations
//                 whose density falls below a single-point kernel mass
//                 are dropped (see row_index).
//   DensityPower: omega = eta_f^4 on the mean block and eta_f^2 on the
//                 variance block. Every division by eta_f cancels, so the
//                 rows are polynomial in the profile components and keep
//                 light tails.
enum class MomentWeight { Ratio, DensityPower };

// Mean-equation moment rows, dimension d1 + d_W - 1:
//   omega * g_mu(i) * J' [ x_i - E[x|t_i] ; m'(t_i) (w_i - E[w|t_i]) ]
MomentMatrix psi_plsim(const Series& series, const Theta& theta,
                       const EtaProfile& eta, const ModelSpec& spec,
                       MomentWeight weight = MomentWeight::Ratio);

// Mean rows stacked over variance rows, dimension d1 + d_W - 1 + d_beta.
MomentMatrix psi_chplsim(const Series& series, const Theta& theta,
                         const EtaProfile& eta, const ModelSpec& spec,
                         MomentWeight weight = MomentWeight::Ratio);

// Dispatches on spec.family.
MomentMatrix build_moments(const Series& series, const Theta& theta,
                           const EtaProfile& eta, const ModelSpec& spec,
                           MomentWeight weight = MomentWeight::Ratio);

}  // namespace chplsim
