#pragma once

#include "chplsim/model.hpp"
#include "chplsim/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace chplsim {

enum class Preset { Design51, DesignSupB2 };

// Zero-mean unit-variance innovation laws:
//   Gaussian N(0,1); Uniform on [-sqrt(3), sqrt(3)];
//   Mixture 0.5 N(-1/sqrt(6), 1/6) + 0.5 N(1/sqrt(6), 3/2).
enum class Innovation { Gaussian, Uniform, Mixture };

struct SimDesign {
  Preset preset = Preset::Design51;
  Eigen::Index n = 1000;
  Eigen::Index burn_in = 500;
  Innovation innovation = Innovation::Gaussian;
  Theta theta_true;
  double rho_w = 0.25;  // VAR(1) coefficient for W
  double rho0 = 0.1;    // AR coefficient of the observed series (DesignSupB2)
  std::uint64_t seed = 0;

  // Preset with the design's true parameter values filled in.
  static SimDesign design51(Eigen::Index n, std::uint64_t seed,
                            Innovation innovation = Innovation::Gaussian);
  static SimDesign sup_b2(Eigen::Index n, std::uint64_t seed,
                          Innovation innovation = Innovation::Gaussian);

  // Throws ConfigError when the parameters violate the geometric
  // ergodicity margin or the sample size is too small.
  void validate() const;
};

// Simulated path plus the hidden truth record.
struct SimOutput {
  Series series;           // y, x = lagged responses, w
  Eigen::VectorXd eps;     // regression error
  Eigen::VectorXd sigma2;  // conditional variance of eps (Design51)
  // DesignSupB2 extras: the latent AR path and its innovations.
  Eigen::VectorXd r_path;
  Eigen::VectorXd u_latent;
};

SimOutput simulate(const SimDesign& design);

// Draw one innovation from the given law.
double draw_innovation(Rng& rng, Innovation law);

// Analytic density of the stationary index w' gamma2 shared by both
// presets: centered Gaussian with variance (16/15) gamma2' S gamma2,
// S_kl = 0.5^|k-l|.
double design_index_variance(const Eigen::VectorXd& gamma2, double rho_w);
std::function<double(double)> design_index_density(
    const Eigen::VectorXd& gamma2, double rho_w);

}  // namespace chplsim
