#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "randfront/bbmre.hpp"
#include "randfront/kpp.hpp"
#include "randfront/pam.hpp"
#include "randfront/rng.hpp"
#include "randfront/stats.hpp"

using namespace randfront;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("single-lineage paths: terminal position is exactly Gaussian") {
  // gm(1e6) has p_1 = 1 - 1e-6: replicas without a true branch event are a
  // pure Brownian motion however often the thinning clock fires, so their
  // terminal positions must be N(x0, T).
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  const double T = 1.0;
  std::vector<double> ends;
  for (int r = 0; r < 10000; ++r) {
    const auto sys = simulate(f, OffspringLaw::gm(1000000), 0.5, T, 1000,
                              derive_seed(99, "kstest", r));
    if (sys.positions.size() == 1) ends.push_back((sys.positions[0] - 0.5) / std::sqrt(T));
  }
  REQUIRE(ends.size() > 9900);  // branching probability ~ 1e-6 per event
  const auto ks = ks_test_normal(ends);
  CHECK(ks.p > 0.01);
}

TEST_CASE("yule growth: mean population e^t for binary branching at rate 1") {
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  const double t = 1.0;
  double sum = 0.0, sumsq = 0.0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    const auto sys =
        simulate(f, OffspringLaw::binary(), 0.0, t, 100000, derive_seed(7, "yule", r));
    const double n = static_cast<double>(sys.positions.size());
    sum += n;
    sumsq += n * n;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sumsq / reps - mean * mean) / (reps - 1));
  CHECK(std::abs(mean - std::exp(t)) < 3.0 * se);
  // second moment of a Yule process: 2e^{2t} - e^t
  const double m2 = sumsq / reps;
  CHECK(std::abs(m2 - (2.0 * std::exp(2.0 * t) - std::exp(t))) <
        4.0 * std::sqrt(m2) /* crude band */);
}

TEST_CASE("count_leq basics and cap handling") {
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  const auto sys = simulate(f, OffspringLaw::binary(), 0.0, 2.0, 100000, 5);
  CHECK(count_leq(sys, kInf) == sys.positions.size());
  double lo = 1e300;
  for (double p : sys.positions) lo = std::min(lo, p);
  CHECK(count_leq(sys, lo - 1.0) == 0);
  CHECK(count_leq(sys, 0.0) <= count_leq(sys, 1.0));

  const auto capped = simulate(f, OffspringLaw::binary(), 0.0, 15.0, 64, 6);
  CHECK(capped.cap_hit);
  CHECK_THROWS(count_leq(capped, 0.0));
}

TEST_CASE("monotone coupling: richer medium grows more on average") {
  // common random numbers across two pointwise-ordered media
  PotentialField low(PotentialSpec::constant_field(1.0, 0));
  PotentialField high(PotentialSpec::constant_field(1.5, 0));
  double mean_low = 0.0, mean_high = 0.0;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const auto seed = derive_seed(3, "couple", r);
    mean_low += static_cast<double>(
        simulate(low, OffspringLaw::binary(), 0.0, 1.5, 100000, seed).positions.size());
    mean_high += static_cast<double>(
        simulate(high, OffspringLaw::binary(), 0.0, 1.5, 100000, seed).positions.size());
  }
  CHECK(mean_high > mean_low);
}

TEST_CASE("survival estimate: near-certain at short times left of the origin") {
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  const auto est = estimate_w(f, OffspringLaw::binary(), -1.0, 0.01, 2000, 11, 2);
  CHECK(est.mean > 0.99);
}

TEST_CASE("many-to-one: mean count matches the homogeneous closed form") {
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  const auto est = estimate_mean_count(f, OffspringLaw::binary(), 0.0, 1.0, 40000, 13, 2);
  const double want = std::exp(1.0) * normal_cdf(0.0);
  CHECK(std::abs(est.mean - want) < 3.0 * est.se);
  // mean count dominates the survival probability
  const auto surv = estimate_w(f, OffspringLaw::binary(), 0.0, 1.0, 40000, 13, 2);
  CHECK(est.mean >= surv.mean);
}

TEST_CASE("McKean identity against the F-KPP solver in a random medium") {
  PotentialField f(PotentialSpec::matern(0.5, 1.0, 0.5, 77));
  const auto law = OffspringLaw::binary();
  GridConfig g;
  const auto w = solve_kpp(f, offspring_to_F(law), InitialCondition::heaviside(), g, 2.0);
  for (double x : {0.0, 1.0, 2.0}) {
    const auto est = estimate_w(f, law, x, 2.0, 30000, 17, 2);
    const double pde = w.plain_value(w.snapshot_index(2.0), x);
    CHECK(std::abs(est.mean - pde) < 3.0 * est.se + 2e-3);
  }
}

TEST_CASE("many-to-one against the PAM solver in a random medium") {
  PotentialField f(PotentialSpec::matern(0.5, 1.0, 0.5, 78));
  GridConfig g;
  const auto u = solve_pam(f, InitialCondition::heaviside(), g, 2.0);
  for (double x : {0.0, 1.0}) {
    const auto est = estimate_mean_count(f, OffspringLaw::binary(), x, 2.0, 30000, 19, 2);
    const double pde = std::exp(u.ln_value(u.snapshot_index(2.0), x));
    CHECK(std::abs(est.mean - pde) < 3.0 * est.se + 2e-3);
  }
}

TEST_CASE("tube moments: degenerate law, sentinel barriers, killed tube") {
  PotentialField f(PotentialSpec::constant_field(1.0, 0));

  // p_1 = 1 (via gm with huge n as above): second moment equals first
  {
    const auto tm = tube_moments(f, OffspringLaw::gm(1000000), 0.0, 1.0, -kInf, kInf,
                                 4000, 21, 2);
    CHECK(tm.mc_second.mean == doctest::Approx(tm.mc_first.mean).epsilon(1e-6));
  }

  // sentinel barriers with binary branching: fk2 = 2e^{2t} - e^t
  {
    const double t = 1.0;
    const auto tm =
        tube_moments(f, OffspringLaw::binary(), 0.0, t, -kInf, kInf, 30000, 23, 2);
    CHECK(tm.fk1 == doctest::Approx(std::exp(t)).epsilon(2e-3));
    CHECK(tm.fk2 ==
          doctest::Approx(2.0 * std::exp(2.0 * t) - std::exp(t)).epsilon(5e-3));
    CHECK(std::abs(tm.mc_first.mean - tm.fk1) < 3.0 * tm.mc_first.se);
    CHECK(std::abs(tm.mc_second.mean - tm.fk2) < 3.0 * tm.mc_second.se);
  }

  // tight tube: Monte Carlo bridge-exact counts against both formulas
  {
    const double t = 1.0;
    const auto tm = tube_moments(f, OffspringLaw::binary(), 0.0, t, -1.0, 1.0,
                                 60000, 25, 2);
    CHECK(std::abs(tm.mc_first.mean - tm.fk1) < 3.0 * tm.mc_first.se + 2e-3);
    CHECK(std::abs(tm.mc_second.mean - tm.fk2) < 3.0 * tm.mc_second.se + 2e-3);
  }
}

TEST_CASE("tube moments in a random medium with one_three offspring") {
  PotentialField f(PotentialSpec::matern(0.5, 1.0, 0.5, 31));
  const auto tm = tube_moments(f, OffspringLaw::one_three(), 0.5, 1.5, -1.0, 2.0,
                               60000, 27, 2);
  CHECK(std::abs(tm.mc_first.mean - tm.fk1) < 3.0 * tm.mc_first.se + 2e-3);
  CHECK(std::abs(tm.mc_second.mean - tm.fk2) < 3.0 * tm.mc_second.se + 5e-3);
}
