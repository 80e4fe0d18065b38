#include "chplsim/simulate.hpp"

#include "chplsim/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace chplsim {

namespace {

constexpr int kDW = 3;

Eigen::MatrixXd covariance_s(int d) {
  Eigen::MatrixXd s(d, d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) s(k, l) = std::pow(0.5, std::abs(k - l));
  return s;
}

double m_sin2(double u) {
  const double v = std::sin(u * M_PI);
  return 0.75 * v * v;
}

Theta design_theta() {
  Theta theta;
  theta.gamma1.resize(2);
  theta.gamma1 << 0.1, 0.0;
  theta.gamma2_free.resize(2);
  theta.gamma2_free << 1.0, 1.0;  // gamma2 = (1, 1, 1) under FixFirst
  return theta;
}

}  // namespace

SimDesign SimDesign::design51(Eigen::Index n, std::uint64_t seed,
                              Innovation innovation) {
  SimDesign d;
  d.preset = Preset::Design51;
  d.n = n;
  d.innovation = innovation;
  d.seed = seed;
  d.theta_true = design_theta();
  d.theta_true.beta.resize(2);
  d.theta_true.beta << 0.9, 0.1;
  return d;
}

SimDesign SimDesign::sup_b2(Eigen::Index n, std::uint64_t seed,
                            Innovation innovation) {
  SimDesign d;
  d.preset = Preset::DesignSupB2;
  d.n = n;
  d.innovation = innovation;
  d.seed = seed;
  d.theta_true = design_theta();
  return d;
}

void SimDesign::validate() const {
  if (n < 10) throw ConfigError("SimDesign: n must be at least 10");
  if (burn_in < 0) throw ConfigError("SimDesign: burn_in must be nonnegative");
  if (std::abs(rho_w) >= 1.0)
    throw ConfigError("SimDesign: |rho_w| must be < 1");
  if (theta_true.gamma1.size() != 2 || theta_true.gamma2_free.size() != 2)
    throw ConfigError("SimDesign: presets use d_X = 2, d_W = 3");
  const double g_sum = theta_true.gamma1.cwiseAbs().sum();
  double margin = g_sum;
  if (preset == Preset::Design51) {
    if (theta_true.beta.size() != 2)
      throw ConfigError("SimDesign: Design51 needs beta of length 2");
    if (theta_true.beta(0) <= 0.0 || theta_true.beta(1) < 0.0)
      throw ConfigError("SimDesign: beta must satisfy b1 > 0, b2 >= 0");
    margin += std::sqrt(theta_true.beta(1));
  } else {
    if (std::abs(rho0) >= 1.0)
      throw ConfigError("SimDesign: |rho0| must be < 1");
    if ((theta_true.gamma1.array() < 0.0).any())
      throw ConfigError("SimDesign: DesignSupB2 needs nonnegative gamma1");
  }
  // Ergodicity margin (keeps the recursion geometrically mixing).
  if (margin >= 1.0)
    throw ConfigError("SimDesign: |g11| + |g12| + sqrt(b2) must be < 1");
}

double draw_innovation(Rng& rng, Innovation law) {
  switch (law) {
    case Innovation::Gaussian:
      return rng.normal();
    case Innovation::Uniform:
      return (2.0 * rng.uniform() - 1.0) * std::sqrt(3.0);
    case Innovation::Mixture: {
      // 0.5 N(-1/sqrt(6), 1/6) + 0.5 N(1/sqrt(6), 3/2)
      const bool first = rng.uniform() < 0.5;
      const double mean = first ? -1.0 / std::sqrt(6.0) : 1.0 / std::sqrt(6.0);
      const double sd = first ? std::sqrt(1.0 / 6.0) : std::sqrt(1.5);
      return mean + sd * rng.normal();
    }
  }
  throw ConfigError("draw_innovation: unknown law");
}

double design_index_variance(const Eigen::VectorXd& gamma2, double rho_w) {
  const Eigen::MatrixXd s = covariance_s(int(gamma2.size()));
  const double stat_scale = 1.0 / (1.0 - rho_w * rho_w);
  return stat_scale * gamma2.dot(s * gamma2);
}

std::function<double(double)> design_index_density(
    const Eigen::VectorXd& gamma2, double rho_w) {
  const double var = design_index_variance(gamma2, rho_w);
  return [var](double t) {
    return std::exp(-0.5 * t * t / var) / std::sqrt(2.0 * M_PI * var);
  };
}

SimOutput simulate(const SimDesign& design) {
  design.validate();
  Rng rng(design.seed);
  const Eigen::Index total = design.burn_in + design.n;

  const Eigen::MatrixXd s = covariance_s(kDW);
  const Eigen::MatrixXd chol_s = s.llt().matrixL();
  const double stat_sd_scale =
      1.0 / std::sqrt(1.0 - design.rho_w * design.rho_w);

  // W_0 from the exact stationary law N(0, S / (1 - rho^2)).
  Eigen::Vector3d w_state;
  {
    Eigen::Vector3d z;
    for (int k = 0; k < kDW; ++k) z(k) = rng.normal();
    w_state = stat_sd_scale * (chol_s * z);
  }

  const Eigen::VectorXd gamma2 =
      materialize_gamma2(design.theta_true,
                         ModelSpec::plsim(2, kDW, Identification::FixFirst));
  const double g11 = design.theta_true.gamma1(0);
  const double g12 = design.theta_true.gamma1(1);

  SimOutput out;
  out.series.y.resize(design.n);
  out.series.x.resize(design.n, 2);
  out.series.w.resize(design.n, kDW);
  out.eps.resize(design.n);
  out.sigma2.resize(design.n);
  if (design.preset == Preset::DesignSupB2) {
    out.r_path.resize(design.n);
    out.u_latent.resize(design.n);
  }

  double y_prev1 = 0.0, y_prev2 = 0.0;  // response recursion state
  double r_prev = 0.0;                  // AR state (DesignSupB2)

  for (Eigen::Index step = 0; step < total; ++step) {
    if (step > 0) {
      Eigen::Vector3d z;
      for (int k = 0; k < kDW; ++k) z(k) = rng.normal();
      w_state = design.rho_w * w_state + chol_s * z;
    }
    const double index = gamma2.dot(w_state);
    const double zeta = draw_innovation(rng, design.innovation);

    double y = 0.0, eps = 0.0, sig2 = 0.0, u = 0.0, r = 0.0;
    if (design.preset == Preset::Design51) {
      sig2 = design.theta_true.beta(0) +
             design.theta_true.beta(1) * y_prev1 * y_prev1;
      eps = std::sqrt(sig2) * zeta;
      y = g11 * y_prev1 + g12 * y_prev2 + m_sin2(index) + eps;
    } else {
      // y is the squared AR innovation: y = mu * zeta^2, u = sqrt(mu) zeta.
      const double mu =
          g11 * y_prev1 + g12 * y_prev2 + 0.25 + m_sin2(index);
      if (!(mu > 0.0))
        throw NumericalError("simulate: nonpositive latent variance");
      u = std::sqrt(mu) * zeta;
      y = u * u;
      eps = y - mu;
      sig2 = mu;
      r = design.rho0 * r_prev + u;
    }

    const Eigen::Index i = step - design.burn_in;
    if (i >= 0) {
      out.series.y(i) = y;
      out.series.x(i, 0) = y_prev1;
      out.series.x(i, 1) = y_prev2;
      out.series.w.row(i) = w_state.transpose();
      out.eps(i) = eps;
      out.sigma2(i) = sig2;
      if (design.preset == Preset::DesignSupB2) {
        out.r_path(i) = r;
        out.u_latent(i) = u;
      }
    }
    y_prev2 = y_prev1;
    y_prev1 = y;
    if (design.preset == Preset::DesignSupB2) r_prev = r;
  }
  return out;
}

}  // namespace chplsim
