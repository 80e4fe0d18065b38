#include "chplsim/kernel.hpp"

#include "chplsim/error.hpp"

#include <cmath>
#include <vector>

namespace chplsim {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}

KernelConfig KernelConfig::manual(double h) {
  KernelConfig cfg;
  cfg.rule = BandwidthRule::Manual;
  cfg.h = h;
  return cfg;
}

KernelConfig KernelConfig::scaled_rate() { return KernelConfig{}; }

double KernelConfig::resolve_bandwidth(const Eigen::VectorXd& index) const {
  double bw = 0.0;
  if (rule == BandwidthRule::Manual) {
    bw = h;
  } else {
    const Eigen::Index n = index.size();
    if (n < 2) throw ConfigError("bandwidth: ScaledRate needs n >= 2");
    const double mean = index.mean();
    const double sd =
        std::sqrt((index.array() - mean).square().sum() / double(n - 1));
    if (!(sd > 0.0) || !std::isfinite(sd))
      throw ConfigError("bandwidth: index has zero or non-finite spread");
    bw = std::pow(double(n), -0.2) / sd;
  }
  if (!(bw > 0.0) || !std::isfinite(bw))
    throw ConfigError("bandwidth: resolved h must be positive");
  return bw;
}

double kernel_eval(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

double kernel_deriv(double u) { return -u * kernel_eval(u); }

Eigen::VectorXd index_values(const Series& series, const Theta& theta,
                             const ModelSpec& spec) {
  return series.w * materialize_gamma2(theta, spec);
}

namespace {

// Accumulator layout per evaluation point, stride = 4 + d1 + d_W:
//   [ sum K, sum res*K, sum K', sum res*K', sum x*K ..., sum w*K ... ]
struct EtaSums {
  Eigen::Index m;
  int d1, dW, stride;
  std::vector<double> buf;

  EtaSums(Eigen::Index m_, int d1_, int dW_)
      : m(m_), d1(d1_), dW(dW_), stride(4 + d1_ + dW_),
        buf(static_cast<std::size_t>(m_) * stride, 0.0) {}

  double* row(Eigen::Index i) { return buf.data() + i * stride; }
};

EtaProfile finalize(EtaSums& sums, double h, double n_norm) {
  const double inv_fh = 1.0 / (n_norm * h);
  const double inv_dh = 1.0 / (n_norm * h * h);
  EtaProfile eta;
  eta.bandwidth = h;
  eta.f.resize(sums.m);
  eta.m.resize(sums.m);
  eta.m_prime.resize(sums.m);
  eta.X.resize(sums.m, sums.d1);
  eta.W.resize(sums.m, sums.dW);
  for (Eigen::Index i = 0; i < sums.m; ++i) {
    const double* a = sums.row(i);
    const double f = a[0] * inv_fh;
    const double mm = a[1] * inv_fh;
    const double df = -a[2] * inv_dh;  // d/dt of the f sum
    const double dm = -a[3] * inv_dh;  // d/dt of the m sum
    eta.f(i) = f;
    eta.m(i) = mm;
    eta.m_prime(i) = f * dm - mm * df;
    for (int c = 0; c < sums.d1; ++c) eta.X(i, c) = a[4 + c] * inv_fh;
    for (int c = 0; c < sums.dW; ++c) eta.W(i, c) = a[4 + sums.d1 + c] * inv_fh;
  }
  return eta;
}

void accumulate_point(double* acc, double k, double kp, double res,
                      const double* xrow, const double* wrow, int d1, int dW) {
  acc[0] += k;
  acc[1] += res * k;
  acc[2] += kp;
  acc[3] += res * kp;
  for (int c = 0; c < d1; ++c) acc[4 + c] += xrow[c] * k;
  for (int c = 0; c < dW; ++c) acc[4 + d1 + c] += wrow[c] * k;
}

}  // namespace

EtaProfile estimate_eta(const Series& series, const Theta& theta,
                        const ModelSpec& spec, const KernelConfig& cfg,
                        bool leave_one_out) {
  series.validate();
  theta.validate(spec);
  const Eigen::Index n = series.n();
  if (n < 1) throw DataError("estimate_eta: empty sample");
  if (leave_one_out && n < 2)
    throw DataError("estimate_eta: leave-one-out needs n >= 2");

  const Eigen::VectorXd t = index_values(series, theta, spec);
  const double h = cfg.resolve_bandwidth(t);
  const Eigen::VectorXd res = series.y - linear_part(series, theta, spec);
  const int d1 = spec.d1();
  const int dW = spec.d_W;
  // Row-major covariate copies so the inner loop touches contiguous memory.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      xr = series.x, wr = series.w;

  EtaSums sums(n, d1, dW);
  const double inv_h = 1.0 / h;
  // Pairs are visited once; K is even and K' odd in the pair offset.
  for (Eigen::Index i = 0; i < n; ++i) {
    double* acc_i = sums.row(i);
    if (!leave_one_out)
      accumulate_point(acc_i, kernel_eval(0.0), 0.0, res(i),
                       xr.data() + i * d1, wr.data() + i * dW, d1, dW);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double u = (t(j) - t(i)) * inv_h;
      const double k = kernel_eval(u);
      const double kp = -u * k;
      accumulate_point(acc_i, k, kp, res(j), xr.data() + j * d1,
                       wr.data() + j * dW, d1, dW);
      accumulate_point(sums.row(j), k, -kp, res(i), xr.data() + i * d1,
                       wr.data() + i * dW, d1, dW);
    }
  }

  EtaProfile eta =
      finalize(sums, h, leave_one_out ? double(n - 1) : double(n));
  eta.leave_one_out = leave_one_out;
  return eta;
}

EtaProfile eta_at_points(const Eigen::VectorXd& eval_points,
                         const Series& sample, const Theta& theta,
                         const ModelSpec& spec, double h) {
  sample.validate();
  theta.validate(spec);
  if (!(h > 0.0)) throw ConfigError("eta_at_points: h must be positive");
  const Eigen::Index n = sample.n();
  if (n < 1) throw DataError("eta_at_points: empty sample");

  const Eigen::VectorXd ts = index_values(sample, theta, spec);
  const Eigen::VectorXd res = sample.y - linear_part(sample, theta, spec);
  const int d1 = spec.d1();
  const int dW = spec.d_W;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      xr = sample.x, wr = sample.w;

  EtaSums sums(eval_points.size(), d1, dW);
  const double inv_h = 1.0 / h;
  for (Eigen::Index i = 0; i < eval_points.size(); ++i) {
    double* acc = sums.row(i);
    const double ti = eval_points(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double u = (ts(j) - ti) * inv_h;
      const double k = kernel_eval(u);
      accumulate_point(acc, k, -u * k, res(j), xr.data() + j * d1,
                       wr.data() + j * dW, d1, dW);
    }
  }
  return finalize(sums, h, double(n));
}

EtaProfile oracle_eta(const Series& series, const Theta& theta,
                      const ModelSpec& spec, const Series& train,
                      const IndexDensity& density, const KernelConfig& cfg) {
  if (!density)
    throw ConfigError("oracle_eta: an analytic index density is required");
  const double h = cfg.resolve_bandwidth(index_values(train, theta, spec));
  const Eigen::VectorXd t = index_values(series, theta, spec);
  EtaProfile eta = eta_at_points(t, train, theta, spec, h);
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double f = density(t(i));
    if (!std::isfinite(f) || f < 0.0)
      throw ConfigError("oracle_eta: density returned an invalid value");
    eta.f(i) = f;
  }
  eta.oracle = true;
  return eta;
}

}  // namespace chplsim
