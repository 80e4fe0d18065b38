#pragma once

#include "chplsim/model.hpp"

#include <Eigen/Dense>

#include <functional>

namespace chplsim {

enum class BandwidthRule { Manual, ScaledRate };

struct KernelConfig {
  BandwidthRule rule = BandwidthRule::ScaledRate;
  double h = 0.0;  // used when rule == Manual

  static KernelConfig manual(double h);
  static KernelConfig scaled_rate();

  // ScaledRate: h = n^{-1/5} / C with C the sample standard deviation of
  // the index values; Manual returns the stored h. Throws ConfigError when
  // the resolved bandwidth is not strictly positive.
  double resolve_bandwidth(const Eigen::VectorXd& index) const;
};

// Gaussian kernel K(u) = (2*pi)^{-1/2} exp(-u^2/2) and its derivative.
double kernel_eval(double u);
double kernel_deriv(double u);

// The five nuisance components evaluated at a common set of points
// t_i = w_i' gamma2.
struct EtaProfile {
  Eigen::VectorXd f;        // index density
  Eigen::VectorXd m;        // m_gamma * f
  Eigen::VectorXd m_prime;  // f^2 * d/dt m_gamma
  Eigen::MatrixXd X;        // E[grad_g1 l | index] * f, n x d1
  Eigen::MatrixXd W;        // E[W | index] * f, n x d_W
  double bandwidth = 0.0;
  bool leave_one_out = false;
  bool oracle = false;

  Eigen::Index size() const { return f.size(); }
};

// Nadaraya-Watson sums over the sample itself. With leave_one_out the
// j = i term is dropped and normalizers use n - 1.
//
// The m_prime component is f * (d/dt of the m sum) - m * (d/dt of the f
// sum); the chain rule through the kernel argument (t_j - t)/h makes each
// d/dt equal to -(1/Nh^2) times the K' sum.
EtaProfile estimate_eta(const Series& series, const Theta& theta,
                        const ModelSpec& spec, const KernelConfig& cfg,
                        bool leave_one_out = false);

// Kernel sums over `sample` evaluated at arbitrary points.
EtaProfile eta_at_points(const Eigen::VectorXd& eval_points,
                         const Series& sample, const Theta& theta,
                         const ModelSpec& spec, double h);

using IndexDensity = std::function<double(double)>;

// Reference-mode profile: f comes from the supplied analytic density of
// the index; the remaining components are kernel sums over an independent
// training sample, evaluated at the test sample's index values. The
// bandwidth rule is resolved on the training index.
EtaProfile oracle_eta(const Series& series, const Theta& theta,
                      const ModelSpec& spec, const Series& train,
                      const IndexDensity& density, const KernelConfig& cfg);

// Index values w_i' gamma2.
Eigen::VectorXd index_values(const Series& series, const Theta& theta,
                             const ModelSpec& spec);

}  // namespace chplsim
