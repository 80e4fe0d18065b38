#include "chplsim/moments.hpp"

#include "chplsim/error.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace chplsim {

namespace {

void check_alignment(const Series& series, const EtaProfile& eta) {
  if (eta.size() != series.n())
    throw DataError("moments: eta profile not aligned with series");
}

// Under leave-one-out smoothing an isolated index point can carry less
// density mass than a single neighbor would contribute; its conditional-
// expectation ratios are meaningless, so its row is dropped in the Ratio
// form. Full-sample and oracle profiles never trigger this (the self
// term, respectively the analytic density, bounds f away from zero).
double density_floor(const EtaProfile& eta) {
  if (!eta.leave_one_out) return 0.0;
  const double n_norm = double(eta.size() - 1);
  return kernel_eval(0.0) / (n_norm * eta.bandwidth);
}

void check_finite_row(const Eigen::VectorXd& row, Eigen::Index obs) {
  if (!row.allFinite())
    throw DataError("moments: non-finite row at observation " +
                    std::to_string(obs));
}

MomentMatrix assemble(const Series& series, const Theta& theta,
                      const EtaProfile& eta, const ModelSpec& spec,
                      MomentWeight weight, bool with_variance) {
  check_alignment(series, eta);
  theta.validate(spec);
  const Eigen::Index n = series.n();
  const int r = with_variance ? spec.r : 0;
  if (n <= r) throw DataError("moments: sample shorter than lag depth");
  const int d1 = spec.d1();
  const int dW = spec.d_W;
  const int d_mean = d1 + dW - 1;
  const int d = d_mean + (with_variance ? spec.d_beta : 0);
  const Eigen::MatrixXd jac = full_jacobian(theta, spec);
  const Eigen::VectorXd res = series.y - linear_part(series, theta, spec);
  const bool ratio = weight == MomentWeight::Ratio;
  const double floor_f = ratio ? density_floor(eta) : 0.0;

  std::vector<Eigen::VectorXd> rows;
  std::vector<Eigen::Index> kept;
  rows.reserve(n - r);
  kept.reserve(n - r);
  Eigen::VectorXd stack(d1 + dW);
  for (Eigen::Index i = r; i < n; ++i) {
    const double f = eta.f(i);
    if (ratio && f < floor_f) continue;  // isolated under leave-one-out
    if (f == 0.0 && ratio)
      throw NumericalError("moments: zero index density at observation " +
                           std::to_string(i));

    Eigen::VectorXd row(d);
    if (ratio) {
      const double gmu = res(i) - eta.m(i) / f;
      const double mp = eta.m_prime(i) / (f * f);
      for (int c = 0; c < d1; ++c)
        stack(c) = series.x(i, c) - eta.X(i, c) / f;
      for (int c = 0; c < dW; ++c)
        stack(d1 + c) = mp * (series.w(i, c) - eta.W(i, c) / f);
      row.head(d_mean) = jac.transpose() * (gmu * stack);
      if (with_variance) {
        const double s2 = sigma2_value(spec, theta, series.y(i - 1));
        row.tail(spec.d_beta) =
            (gmu * gmu - s2) * sigma2_grad(spec, series.y(i - 1));
      }
    } else {
      // density-power form: a = g_mu * f, all denominators cancelled
      const double a = res(i) * f - eta.m(i);
      const double f2 = f * f;
      for (int c = 0; c < d1; ++c)
        stack(c) = f2 * (series.x(i, c) * f - eta.X(i, c));
      const double mp = eta.m_prime(i);
      for (int c = 0; c < dW; ++c)
        stack(d1 + c) = mp * (series.w(i, c) * f - eta.W(i, c));
      row.head(d_mean) = jac.transpose() * (a * stack);
      if (with_variance) {
        const double s2 = sigma2_value(spec, theta, series.y(i - 1));
        row.tail(spec.d_beta) =
            (a * a - s2 * f2) * sigma2_grad(spec, series.y(i - 1));
      }
    }
    check_finite_row(row, i);
    rows.push_back(std::move(row));
    kept.push_back(i);
  }
  if (rows.empty()) throw DataError("moments: no usable rows");

  MomentMatrix out;
  out.psi.resize(Eigen::Index(rows.size()), d);
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.psi.row(Eigen::Index(k)) = rows[k].transpose();
  out.row_index = std::move(kept);
  return out;
}

}  // namespace

double g_mu(const Series& series, const Theta& theta, const EtaProfile& eta,
            const ModelSpec& spec, Eigen::Index i) {
  check_alignment(series, eta);
  const double f = eta.f(i);
  if (f == 0.0)
    throw NumericalError("g_mu: zero index density at observation " +
                         std::to_string(i));
  double l = 0.0;
  if (spec.d1() > 0) l = series.x.row(i) * theta.gamma1;
  return series.y(i) - l - eta.m(i) / f;
}

double g_sigma(const Series& series, const Theta& theta,
               const EtaProfile& eta, const ModelSpec& spec, Eigen::Index i) {
  if (i < spec.r)
    throw DataError("g_sigma: observation " + std::to_string(i) +
                    " lacks the required lags");
  const double gm = g_mu(series, theta, eta, spec, i);
  return gm * gm - sigma2_value(spec, theta, series.y(i - 1));
}

MomentMatrix psi_plsim(const Series& series, const Theta& theta,
                       const EtaProfile& eta, const ModelSpec& spec,
                       MomentWeight weight) {
  return assemble(series, theta, eta, spec, weight, /*with_variance=*/false);
}

MomentMatrix psi_chplsim(const Series& series, const Theta& theta,
                         const EtaProfile& eta, const ModelSpec& spec,
                         MomentWeight weight) {
  if (spec.family != Family::CHPLSIM)
    throw ConfigError("psi_chplsim: model has no variance part");
  return assemble(series, theta, eta, spec, weight, /*with_variance=*/true);
}

MomentMatrix build_moments(const Series& series, const Theta& theta,
                           const EtaProfile& eta, const ModelSpec& spec,
                           MomentWeight weight) {
  return spec.family == Family::PLSIM
             ? psi_plsim(series, theta, eta, spec, weight)
             : psi_chplsim(series, theta, eta, spec, weight);
}

}  // namespace chplsim
