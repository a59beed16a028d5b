#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "randfront/lyapunov.hpp"

using namespace randfront;

namespace {

LyapunovProfile constant_profile(double es = 1.0) {
  BvpConfig bvp;
  LyapunovConfig cfg;
  cfg.n_env = 2;  // constant field: replicas are identical
  cfg.n_units = 2;
  cfg.sigma_env = 8;
  cfg.eta_points = 400;
  cfg.jobs = 2;
  return build_profile(PotentialSpec::constant_field(es, 0), bvp, cfg);
}

LyapunovConfig light_cfg() {
  LyapunovConfig cfg;
  cfg.eta_points = 160;
  cfg.n_env = 8;
  cfg.n_units = 16;
  cfg.sigma_env = 256;
  cfg.jobs = 2;
  return cfg;
}

}  // namespace

TEST_CASE("constant potential: the full closed-form Lyapunov suite") {
  const auto p = constant_profile(1.0);

  // L(eta) = -sqrt(-2 eta) on the table
  for (std::size_t j = 0; j < p.eta_grid.size(); j += 37) {
    const double eta = p.eta_grid[j];
    const double want = -std::sqrt(-2.0 * eta);
    CHECK(std::abs(p.L_tab[j] - want) <= 1e-4 * std::abs(want));
    CHECK(p.L_se_tab[j] == 0.0);
  }

  // eta_bar(v) = -v^2/2, L*(1/v) = v/2, Lambda(v) = 1 - v^2/2
  for (double v : {1.0, std::sqrt(2.0), 2.0}) {
    CHECK(p.eta_bar(v) == doctest::Approx(-0.5 * v * v).epsilon(1e-3));
    CHECK(p.legendre_star(v) == doctest::Approx(0.5 * v).epsilon(1e-3));
    CHECK(p.lambda(v) == doctest::Approx(1.0 - 0.5 * v * v).epsilon(2e-3));
  }
  CHECK(p.lambda(0.0) == doctest::Approx(1.0));  // Lambda(0) = es
  CHECK(std::abs(p.lambda(std::sqrt(2.0))) < 1e-3);

  CHECK(p.v0 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
  CHECK(p.v0_variational == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
  CHECK(std::abs(p.vc) < 1e-3);
  CHECK(p.vel_ok);
  CHECK(p.sigma2_v0 == 0.0);
  CHECK(p.sigma_tilde2 == 0.0);
}

TEST_CASE("constant potential scales as sqrt(2 es)") {
  const auto p = constant_profile(2.5);
  CHECK(p.v0 == doctest::Approx(std::sqrt(5.0)).epsilon(1e-3));
  CHECK(p.lambda(0.0) == doctest::Approx(2.5));
  CHECK(std::abs(p.vc) < 2e-3);
}

TEST_CASE("expected_log_mgf: closed form and monotone band") {
  BvpConfig bvp;
  const auto cs = PotentialSpec::constant_field(1.0, 0);
  const auto ms = expected_log_mgf(cs, -0.5, 3, 2, bvp, 2);
  CHECK(ms.mean == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(ms.se == 0.0);

  const double a = 2.0, eta = -0.8;
  const auto spec = PotentialSpec::matern(0.5, a, 0.5, 3);
  const auto mm = expected_log_mgf(spec, eta, 6, 12, bvp, 2);
  CHECK(mm.mean >= -std::sqrt(2.0 * (a - eta)) - 1e-9);
  CHECK(mm.mean <= -std::sqrt(-2.0 * eta) + 1e-9);
  CHECK(mm.se > 0.0);
}

TEST_CASE("standard error shrinks with the replica budget") {
  BvpConfig bvp;
  const auto spec = PotentialSpec::matern(0.5, 2.0, 0.5, 12);
  const auto small = expected_log_mgf(spec, -0.7, 8, 8, bvp, 2);
  const auto big = expected_log_mgf(spec, -0.7, 128, 8, bvp, 2);
  // 16x the environments: expect ~4x smaller SE, generous band for noise
  CHECK(big.se < small.se);
  CHECK(big.se > small.se / 16.0);
}

TEST_CASE("legendre duality and concavity on a random-field profile") {
  BvpConfig bvp;
  const auto spec = PotentialSpec::matern(3.0, 2.0, 0.9, 41);
  const auto p = build_profile(spec, bvp, light_cfg());

  REQUIRE(p.v_grid.size() > 4);
  for (std::size_t k = 0; k < p.v_grid.size(); k += 5) {
    const double v = p.v_grid[k];
    const double star = p.legendre_tab[k];
    double sup = -1e300;
    for (std::size_t j = 0; j < p.eta_grid.size(); ++j)
      sup = std::max(sup, p.eta_grid[j] / v - p.L_tab[j]);
    CHECK(star >= sup - 1e-6);  // a true supremum dominates every grid value
    // dual route on the interpolant agrees tightly
    CHECK(p.legendre_star_by_sup(v) == doctest::Approx(star).epsilon(1e-6));
    // residual of the defining root
    CHECK(std::abs(p.dL_at(p.eta_bar_tab[k]) * v - 1.0) < 1e-8);
  }

  // concavity: second differences of lambda on the uniform v grid
  for (std::size_t k = 2; k < p.v_grid.size(); ++k) {
    const double d2 =
        p.lambda_tab[k] - 2.0 * p.lambda_tab[k - 1] + p.lambda_tab[k - 2];
    CHECK(d2 <= 1e-6);
  }

  CHECK(std::abs(p.lambda(p.v0)) < 1e-6 * spec.es);
  CHECK(std::abs(p.v0 - p.v0_variational) < 0.01 * p.v0);
  CHECK(p.vel_ok == (p.v0 > p.vc));

  // eta_bar decreasing across the v grid
  for (std::size_t k = 1; k < p.eta_bar_tab.size(); ++k)
    CHECK(p.eta_bar_tab[k] < p.eta_bar_tab[k - 1]);
}

TEST_CASE("vc is positive for media with a uniform negative part") {
  BvpConfig bvp;
  // sparse tall bumps: zeta == -a on long stretches forces L'(0-) < infinity
  const auto spec = PotentialSpec::matern(0.5, 5.0, 0.05, 8);
  auto cfg = light_cfg();
  cfg.n_env = 4;
  cfg.n_units = 8;
  cfg.eta_points = 120;
  const auto p = build_profile(spec, bvp, cfg);
  CHECK(p.vc > 0.5);  // roughly sqrt(2a) corrected by the bumps
  CHECK(p.vc < std::sqrt(2.0 * 5.0) * 1.2);
  // strong sparse disorder: the variational infimum moves to the eta->0- edge
  CHECK(p.v0_var_at_boundary);
  CHECK(std::abs(p.v0 - p.v0_variational) < 0.01 * p.v0);
}

TEST_CASE("empirical tilt: constant closed form and the not-found convention") {
  BvpConfig bvp;
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  for (double v : {1.0, std::sqrt(2.0), 2.0}) {
    const auto t = empirical_tilt(f, 6.0, v, bvp);
    REQUIRE(t.found);
    CHECK(t.eta_x == doctest::Approx(-0.5 * v * v).epsilon(1e-5));
  }
  const auto none = empirical_tilt(f, 6.0, 1e-4, bvp);
  CHECK_FALSE(none.found);
  CHECK(none.eta_x == 0.0);
}

TEST_CASE("sigma_v2: zero for constant media, lag plateau for finite range") {
  BvpConfig bvp;
  const auto pc = constant_profile(1.0);
  const auto zero = sigma_v2(pc, std::sqrt(2.0), 8, 4, 4, 2);
  CHECK(zero.mean == doctest::Approx(0.0).epsilon(1e-20));
  CHECK(zero.se == doctest::Approx(0.0));

  const auto spec = PotentialSpec::matern(3.0, 2.0, 0.9, 4);
  const auto p = build_profile(spec, bvp, light_cfg());
  // doubling the cutoff moves the estimate by less than 2 SE
  const auto s1 = sigma_v2(p, p.v0, 48, 8, 128, 2);
  const auto s2 = sigma_v2(p, p.v0, 48, 16, 128, 2);
  CHECK(std::abs(s1.mean - s2.mean) <
        2.0 * std::sqrt(s1.se * s1.se + s2.se * s2.se) + 1e-12);
  CHECK(s1.mean >= -3.0 * s1.se);
  // profile carries the same plateau check
  CHECK(std::abs(p.sigma2_v0 - p.sigma2_v0_doubled_lag) <
        2.0 * p.sigma2_v0_se + 1e-12);
}

TEST_CASE("sigma_tilde2: deterministic zero and seed invariance for constants") {
  const auto p1 = constant_profile(1.0);
  CHECK(p1.sigma_tilde2 == 0.0);
  BvpConfig bvp;
  LyapunovConfig cfg;
  cfg.n_env = 2;
  cfg.n_units = 2;
  cfg.sigma_env = 8;
  cfg.jobs = 2;
  const auto p2 = build_profile(PotentialSpec::constant_field(1.0, 777), bvp, cfg);
  CHECK(p2.sigma_tilde2 == p1.sigma_tilde2);
  CHECK(p2.v0 == doctest::Approx(p1.v0).epsilon(1e-12));
}

TEST_CASE("empirical Legendre process vanishes for constant media") {
  const auto p = constant_profile(1.0);
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  const auto w = empirical_legendre_process(p, f, std::sqrt(2.0), 9.0);
  REQUIRE(w.tilt_found);
  CHECK(std::abs(w.w) < 1e-3);
}
