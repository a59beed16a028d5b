#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "randfront/hitting.hpp"
#include "randfront/potential.hpp"
#include "randfront/stats.hpp"

using namespace randfront;

namespace {

// E_1[e^{-lambda H_0}] = e^{-sqrt(2 lambda)}: for constant zeta == c <= 0 the
// unit crossing log-MGF is -sqrt(2(-c-eta)). This closed form anchors every
// elliptic solve below.
double closed_form_L(double c, double eta) { return -std::sqrt(2.0 * (-c - eta)); }

PotentialField constant_xi(double value) {
  return PotentialField(PotentialSpec::constant_field(value, 0));
}

}  // namespace

TEST_CASE("unit crossing log-MGF matches the Laplace-transform closed form") {
  BvpConfig cfg;
  auto f10 = constant_xi(1.0);  // zeta == 0
  CHECK(log_mgf_unit(f10, 1, -0.5, cfg) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(log_mgf_unit(f10, 1, -2.0, cfg) == doctest::Approx(-2.0).epsilon(1e-6));
  auto f15 = constant_xi(1.5).shifted(0.0);
  // zeta == -1.5 realized by comparing against es of a larger field: use a
  // dedicated constant field with value 1.5 and eta shifted accordingly:
  // L = -sqrt(2(1.5 - (-0.5))) = -2 for c = -1.5, eta = -0.5.
  PotentialSpec shifted_spec = PotentialSpec::constant_field(1.5, 0);
  PotentialField f(shifted_spec);
  // evaluate_zeta == 0 for a constant field; emulate c = -1.5 via eta
  CHECK(log_mgf_unit(f, 1, -2.0, cfg) == doctest::Approx(closed_form_L(0.0, -2.0)).epsilon(1e-6));

  // full closed-form sweep, 1e-6 relative on eta in [-5, -0.05]
  for (double eta = -5.0; eta <= -0.05; eta += 0.15) {
    const double got = log_mgf_unit(f10, 1, eta, cfg);
    const double want = closed_form_L(0.0, eta);
    CHECK(std::abs(got - want) <= 1e-6 * std::abs(want));
  }
  // unit index does not matter for a constant field
  CHECK(log_mgf_unit(f10, 42, -1.0, cfg) ==
        doctest::Approx(log_mgf_unit(f10, 1, -1.0, cfg)).epsilon(1e-12));
}

TEST_CASE("constant-floor field reproduces the shifted closed form") {
  // matern field probed far from every bump behaves as zeta == -a; instead of
  // relying on bump-free stretches, check the exact shifted constant by
  // building a two-level comparison: L(eta) for zeta == -a equals the
  // closed form with c = -a.
  BvpConfig cfg;
  const double a = 1.5;
  // emulate zeta == -a by a constant field and eta' = eta - a:
  auto f = constant_xi(1.0);
  const double eta = -0.5;
  CHECK(log_mgf_unit(f, 1, eta - a, cfg) ==
        doctest::Approx(closed_form_L(-a, eta)).epsilon(1e-6));
  CHECK(closed_form_L(-a, eta) == doctest::Approx(-2.0));
}

TEST_CASE("partial crossing: closed form, endpoint limits") {
  BvpConfig cfg;
  auto f = constant_xi(1.0);
  const double eta = -0.5;
  CHECK(log_mgf_partial(f, 3.5, eta, cfg) == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(log_mgf_partial(f, 3.001, eta, cfg) == doctest::Approx(-0.001).epsilon(1e-3));
  CHECK(log_mgf_partial(f, 3.999, eta, cfg) ==
        doctest::Approx(log_mgf_unit(f, 4, eta, cfg)).epsilon(1e-3));
  CHECK_THROWS(log_mgf_partial(f, 4.0, eta, cfg));  // integer x rejected
}

TEST_CASE("averaged log-MGF: closed form and Markov additivity") {
  BvpConfig cfg;
  auto f = constant_xi(1.0);
  CHECK(log_mgf_avg(f, 7.0, -0.5, cfg) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(log_mgf_avg(f, 1.0, -2.0, cfg) ==
        doctest::Approx(log_mgf_unit(f, 1, -2.0, cfg)).epsilon(1e-12));

  PotentialField rf(PotentialSpec::matern(0.5, 2.0, 0.5, 99));
  const double x = 6.5;
  double total = 0.0;
  for (long i = 1; i <= 6; ++i) total += log_mgf_unit(rf, i, -0.7, cfg);
  total += log_mgf_partial(rf, x, -0.7, cfg);
  CHECK(log_mgf_avg(rf, x, -0.7, cfg) == doctest::Approx(total / x).epsilon(1e-10));
}

TEST_CASE("eta-derivatives match the closed forms") {
  BvpConfig cfg;
  auto f = constant_xi(1.0);
  // L'(eta) = (-2 eta)^{-1/2}, L''(eta) = (-2 eta)^{-3/2}
  CHECK(d_log_mgf(f, 1, -0.5, 1, cfg) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(d_log_mgf(f, 1, -0.5, 2, cfg) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(d_log_mgf(f, 1, -2.0, 1, cfg) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(d_log_mgf(f, 1, -2.0, 2, cfg) == doctest::Approx(0.125).epsilon(1e-5));
}

TEST_CASE("convexity: first derivative increases in eta, second positive") {
  BvpConfig cfg;
  PotentialField rf(PotentialSpec::matern(0.5, 2.0, 0.5, 5));
  double prev = 0.0;
  bool first = true;
  for (double eta = -5.0; eta <= -0.05; eta += 0.33) {
    const double d1 = d_log_mgf(rf, 2, eta, 1, cfg);
    const double d2 = d_log_mgf(rf, 2, eta, 2, cfg);
    CHECK(d1 > 0.0);
    CHECK(d2 > 0.0);
    if (!first) CHECK(d1 > prev);
    prev = d1;
    first = false;
  }
}

TEST_CASE("truncation insensitivity in the right margin") {
  BvpConfig near;
  BvpConfig far;
  far.right_margin = 60.0;
  PotentialField rf(PotentialSpec::matern(0.5, 2.0, 0.5, 17));
  for (double eta : {-0.05, -0.5, -3.0}) {
    const double a = log_mgf_unit(rf, 1, eta, near);
    const double b = log_mgf_unit(rf, 1, eta, far);
    CHECK(std::abs(a - b) < 1e-8);
  }
}

TEST_CASE("uniform bands across random environments") {
  BvpConfig cfg;
  // Lemma-style check: on a compact eta interval the values and derivatives
  // stay in fixed bands across environments.
  const double eta_lo = -3.0, eta_hi = -0.3;
  const double band_lo_L = -std::sqrt(2.0 * (2.0 + 3.0));  // c = -(es-ei) = -2
  const double band_hi_L = -std::sqrt(2.0 * 0.3);
  for (int e = 0; e < 100; ++e) {
    PotentialField rf(PotentialSpec::matern(0.5, 2.0, 0.5, 1000 + e));
    for (double eta : {eta_lo, -1.0, eta_hi}) {
      const double L = log_mgf_unit(rf, 1, eta, cfg);
      CHECK(L >= band_lo_L - 1e-6);
      CHECK(L <= band_hi_L + 1e-6);
    }
  }
}

TEST_CASE("eta domain errors") {
  BvpConfig cfg;
  auto f = constant_xi(1.0);
  CHECK_THROWS_AS(log_mgf_unit(f, 1, 0.5, cfg), std::domain_error);
  CHECK_THROWS_AS(log_mgf_unit(f, 1, 0.0, cfg), std::domain_error);
  CHECK_THROWS_AS(log_mgf_unit(f, 1, -21.0, cfg), std::domain_error);
  CHECK_THROWS_AS(d_log_mgf(f, 1, -1e-9, 1, cfg), std::domain_error);
}

TEST_CASE("time-constrained crossing: reflection-principle closed form") {
  BvpConfig cfg;
  cfg.k_win = 1.0;
  auto f = constant_xi(1.0);  // zeta == 0: g(t,x) = P_x(H_0 <= t) = 2 Phi(-x/sqrt t)
  const auto [g_t, g_early] = hitting_time_functional(f, 2.0, 4.0, cfg);
  const double want = 2.0 * normal_cdf(-1.0);
  CHECK(g_t == doctest::Approx(want).epsilon(2e-3));
  CHECK(g_early < g_t);  // monotone in t
  CHECK(g_t <= 1.0);
  CHECK(g_early >= 0.0);

  // non-decreasing in t on a few probes
  double prev = 0.0;
  for (double t = 6.0; t <= 14.0; t += 2.0) {
    const auto [gt, ge] = hitting_time_functional(f, 3.0, t, cfg);
    CHECK(gt >= prev - 1e-12);
    CHECK(gt <= 1.0 + 1e-12);
    prev = gt;
  }
  CHECK_THROWS(hitting_time_functional(f, 2.0, cfg.k_win * 0.5, cfg));
}

TEST_CASE("batch Y decomposition agrees with the single-probe path") {
  BvpConfig cfg;
  PotentialField rf(PotentialSpec::matern(0.5, 1.0, 0.5, 23));
  const double v = 1.3;
  const std::vector<double> xs = {10.0, 20.0};
  const auto batch = y_decomposition_batch(rf, xs, v, cfg);
  REQUIRE(batch.size() == 2);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto [g_t, g_early] = hitting_time_functional(rf, xs[i], xs[i] / v, cfg);
    CHECK(batch[i].y_total == doctest::Approx(g_t).epsilon(5e-3));
    CHECK(batch[i].y_above == doctest::Approx(g_early).epsilon(5e-3));
    CHECK(batch[i].y_window == doctest::Approx(batch[i].y_total - batch[i].y_above));
  }
}

TEST_CASE("ZetaGrid reproduces the field-level operations") {
  BvpConfig cfg;
  PotentialField rf(PotentialSpec::matern(0.5, 2.0, 0.5, 31));
  ZetaGrid grid(rf, 8, cfg);
  for (long i : {1L, 3L, 8L}) {
    CHECK(grid.log_mgf_unit(i, -0.8) ==
          doctest::Approx(log_mgf_unit(rf, i, -0.8, cfg)).epsilon(1e-12));
    CHECK(grid.d_log_mgf(i, -0.8, 1) ==
          doctest::Approx(d_log_mgf(rf, i, -0.8, 1, cfg)).epsilon(1e-10));
  }
  // constant field: empirical tilt solves L'(eta) = 1/v exactly at -v^2/2
  PotentialField cf(PotentialSpec::constant_field(1.0, 0));
  ZetaGrid cgrid(cf, 5, cfg);
  const auto tilt = cgrid.empirical_tilt(5, std::sqrt(2.0));
  REQUIRE(tilt.found);
  CHECK(tilt.eta_x == doctest::Approx(-1.0).epsilon(1e-5));
  // not-found convention: v below the reachable slope
  const auto none = cgrid.empirical_tilt(5, 1e-3);
  CHECK_FALSE(none.found);
  CHECK(none.eta_x == 0.0);
}
