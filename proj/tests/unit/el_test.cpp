#include "chplsim/el.hpp"
#include "chplsim/error.hpp"
#include "chplsim/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chi2_oracle.hpp"
#include "el_oracle.hpp"

using namespace chplsim;

namespace {

MomentMatrix rows_1d(std::initializer_list<double> values) {
  MomentMatrix psi;
  psi.psi.resize(Eigen::Index(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) psi.psi(i++, 0) = v;
  return psi;
}

}  // namespace

TEST_CASE("two-point exact solutions") {
  // symmetric rows: the mean is already zero
  ELResult r = solve_lambda(rows_1d({1.0, -1.0}));
  CHECK(r.status == ELStatus::Converged);
  CHECK(r.lambda(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.ell_n == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.wilks == doctest::Approx(0.0).epsilon(1e-12));

  // closed-form root of -1/(1-l) + 2/(1+2l) = 0
  r = solve_lambda(rows_1d({-1.0, 2.0}));
  CHECK(r.status == ELStatus::Converged);
  CHECK(r.lambda(0) == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(r.ell_n == doctest::Approx(std::log(9.0 / 8.0)).epsilon(1e-8));
  CHECK(r.wilks == doctest::Approx(2.0 * std::log(9.0 / 8.0)).epsilon(1e-8));
  CHECK(r.weights.sum() == doctest::Approx(1.0).epsilon(1e-10));

  // all rows positive: zero lies outside the hull
  r = solve_lambda(rows_1d({1.0, 2.0, 3.0, 0.5}));
  CHECK(r.status == ELStatus::HullViolation);
  CHECK(std::isinf(r.wilks));
  CHECK(r.p_value == 0.0);
}

TEST_CASE("error paths") {
  MomentMatrix thin;
  thin.psi.resize(2, 3);
  thin.psi.setRandom();
  CHECK_THROWS_AS(solve_lambda(thin), NumericalError);  // n_eff <= d

  MomentMatrix degenerate;
  degenerate.psi.resize(50, 2);
  for (int i = 0; i < 50; ++i) {
    const double v = (i % 2 == 0) ? 1.0 : -1.0;
    degenerate.psi(i, 0) = v;
    degenerate.psi(i, 1) = 2.0 * v;  // exactly collinear columns
  }
  CHECK_THROWS_AS(solve_lambda(degenerate), NumericalError);
}

TEST_CASE("converged invariants") {
  Rng rng(2024);
  MomentMatrix psi;
  psi.psi.resize(300, 3);
  for (Eigen::Index i = 0; i < 300; ++i)
    for (int c = 0; c < 3; ++c) psi.psi(i, c) = rng.normal() + 0.05;
  const ELResult r = solve_lambda(psi);
  REQUIRE(r.status == ELStatus::Converged);
  CHECK(r.ell_n >= -1e-12);
  CHECK(r.weights.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.weights.minCoeff() > 0.0);
  CHECK(r.weights.maxCoeff() < 1.0);
  // weighted moment constraint, per coordinate scaled by column sd
  const Eigen::VectorXd constraint = psi.psi.transpose() * r.weights;
  for (int c = 0; c < 3; ++c) {
    const double sd = std::sqrt(
        (psi.psi.col(c).array() - psi.psi.col(c).mean()).square().mean());
    CHECK(std::fabs(constraint(c)) / sd <= 1e-8);
  }
}

TEST_CASE("positive scaling and affine invariance") {
  Rng rng(555);
  MomentMatrix psi;
  psi.psi.resize(200, 2);
  for (Eigen::Index i = 0; i < 200; ++i)
    for (int c = 0; c < 2; ++c) psi.psi(i, c) = rng.normal() + 0.1 * c;
  const ELResult base = solve_lambda(psi);
  REQUIRE(base.status == ELStatus::Converged);

  MomentMatrix scaled;
  scaled.psi = 3.7 * psi.psi;
  const ELResult s = solve_lambda(scaled);
  CHECK(s.ell_n == doctest::Approx(base.ell_n).epsilon(1e-10));
  CHECK(s.wilks == doctest::Approx(base.wilks).epsilon(1e-10));
  CHECK((s.lambda * 3.7 - base.lambda).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((s.weights - base.weights).cwiseAbs().maxCoeff() <= 1e-10);

  Eigen::Matrix2d a;
  a << 2.0, -1.0, 0.5, 1.5;  // invertible
  MomentMatrix mixed;
  mixed.psi = psi.psi * a.transpose();
  const ELResult m = solve_lambda(mixed);
  CHECK(m.ell_n == doctest::Approx(base.ell_n).epsilon(1e-8));
  CHECK(m.wilks == doctest::Approx(base.wilks).epsilon(1e-8));
}

TEST_CASE("1-d solver matches the bisection oracle") {
  Rng rng(909);
  int solved = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 20 + int(rng.uniform() * 60);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal() + 0.4 * rng.uniform();
    if (v.minCoeff() >= 0.0 || v.maxCoeff() <= 0.0) continue;  // hull case
    MomentMatrix psi;
    psi.psi = v;
    const ELResult r = solve_lambda(psi);
    REQUIRE(r.status == ELStatus::Converged);
    CHECK(r.lambda(0) ==
          doctest::Approx(chplsim_test::bisect_el_lambda(v)).epsilon(1e-5));
    ++solved;
  }
  CHECK(solved > 150);
}

TEST_CASE("chi2_sf values and properties") {
  CHECK(chi2_sf(0.0, 1) == 1.0);
  CHECK(chi2_sf(0.0, 7) == 1.0);
  // 0.05 quantiles, frozen from the quadrature oracle
  CHECK(chi2_sf(3.8414588, 1) == doctest::Approx(0.05).epsilon(2e-7));
  CHECK(chi2_sf(9.487729, 4) == doctest::Approx(0.05).epsilon(2e-7));
  CHECK_THROWS_AS(chi2_sf(-0.1, 3), std::domain_error);
  CHECK_THROWS_AS(chi2_sf(1.0, 0), std::domain_error);

  // quadrature oracle agreement on a grid
  for (int df = 1; df <= 10; ++df) {
    for (int k = 1; k <= 5; ++k) {
      const double x = 0.3 * df * k + 0.1;
      CHECK(std::fabs(chi2_sf(x, df) -
                      chplsim_test::chi2_sf_quadrature(x, df)) <= 1e-10);
    }
  }

  // strict monotonicity in x
  for (int df : {1, 4, 6}) {
    double prev = chi2_sf(0.05, df);
    for (double x = 0.3; x < 25.0; x += 0.25) {
      const double cur = chi2_sf(x, df);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("wilks pivotalness for synthetic gaussian rows") {
  // reduced-size version of the acceptance criterion (500 reps here)
  Rng rng(31337);
  std::vector<double> ws;
  for (int rep = 0; rep < 500; ++rep) {
    MomentMatrix psi;
    psi.psi.resize(500, 4);
    for (Eigen::Index i = 0; i < 500; ++i)
      for (int c = 0; c < 4; ++c) psi.psi(i, c) = rng.normal();
    const ELResult r = solve_lambda(psi);
    REQUIRE(r.status == ELStatus::Converged);
    ws.push_back(r.wilks);
  }
  const double mean =
      std::accumulate(ws.begin(), ws.end(), 0.0) / double(ws.size());
  std::sort(ws.begin(), ws.end());
  CHECK(mean == doctest::Approx(4.0).epsilon(0.12));
  CHECK(ws[std::size_t(0.95 * ws.size())] == doctest::Approx(9.488).epsilon(0.12));
}
