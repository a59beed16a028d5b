#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <thread>

#include "randfront/potential.hpp"
#include "randfront/rng.hpp"
#include "randfront/stats.hpp"

using namespace randfront;

namespace {
PotentialSpec test_matern(double a = 2.0, double ei = 0.5, double eps = 0.5,
                          std::uint64_t seed = 7) {
  return PotentialSpec::matern(ei, a, eps, seed);
}
}  // namespace

TEST_CASE("constant potential evaluates to its single value") {
  PotentialField f(PotentialSpec::constant_field(1.0, 3));
  for (double x : {-17.3, -1.0, 0.0, 0.5, 123.456}) {
    CHECK(f.evaluate(x) == 1.0);
    CHECK(f.evaluate_zeta(x) == 0.0);
  }
}

TEST_CASE("mollifier peak, support, and symmetry") {
  CHECK(mollifier_value(0.0, 0.5) == doctest::Approx(1.0));
  CHECK(mollifier_value(0.0, 0.01) == doctest::Approx(1.0));
  CHECK(mollifier_value(0.6 * 0.5, 0.5) == 0.0);
  CHECK(mollifier_value(-0.25, 0.5) == 0.0);
  CHECK(mollifier_value(-0.1, 1.0) == doctest::Approx(mollifier_value(0.1, 1.0)));
  // non-increasing away from the peak
  double prev = 1.0;
  for (int k = 1; k <= 50; ++k) {
    const double v = mollifier_value(0.01 * k, 1.0);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }
  // the hard-coded slope bound dominates a fine-grid scan
  double worst = 0.0;
  const double h = 1e-6;
  for (double u = -0.4999; u < 0.4999; u += 1e-4) {
    const double s = std::abs(mollifier_value(u + h, 1.0) - mollifier_value(u, 1.0)) / h;
    worst = std::max(worst, s);
  }
  CHECK(worst <= mollifier_sup_slope());
  CHECK(worst >= 0.95 * mollifier_sup_slope());
}

TEST_CASE("hardcore thinning oracle on forced configurations") {
  CHECK(hardcore_thin({0.0, 0.4, 3.0}) == std::vector<double>{3.0});
  CHECK(hardcore_thin({0.0, 2.0, 4.0}) == std::vector<double>{0.0, 2.0, 4.0});
  CHECK(hardcore_thin({0.0, 1.0}) == std::vector<double>{});  // distance exactly 1
}

TEST_CASE("cell-based matern points match the brute-force oracle") {
  const auto spec = test_matern();
  // raw points of the covered cells, regenerated with the same keys
  const double lo = -40.0, hi = 40.0;
  std::vector<double> raw;
  const auto klo = static_cast<std::int64_t>(std::floor((lo - 2.0) / spec.cell_size));
  const auto khi = static_cast<std::int64_t>(std::floor((hi + 2.0) / spec.cell_size));
  for (std::int64_t k = klo; k <= khi; ++k) {
    CounterRng rng(derive_seed(spec.seed, "poisson-cell", static_cast<std::uint64_t>(k)), 0);
    const int n = rng.poisson(spec.cell_size);
    for (int j = 0; j < n; ++j)
      raw.push_back(static_cast<double>(k) * spec.cell_size + spec.cell_size * rng.uniform());
  }
  auto oracle = hardcore_thin(raw);
  std::erase_if(oracle, [&](double p) { return p < lo || p >= hi; });
  const auto pts = matern_points(spec, lo, hi);
  REQUIRE(pts.size() == oracle.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK(pts[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
  // all surviving pairs separated by more than 1
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i] - pts[i - 1] > 1.0);
}

TEST_CASE("matern retained intensity approaches exp(-2)") {
  // simultaneous deletion keeps a unit-rate Poisson point iff its two-sided
  // unit neighbourhood is empty: intensity e^{-2} per unit length
  const auto spec = test_matern(2.0, 0.5, 0.5, 4242);
  const double span = 10000.0;
  const auto pts = matern_points(spec, 0.0, span);
  const double intensity = static_cast<double>(pts.size()) / span;
  const double want = std::exp(-2.0);
  // retained points are negatively associated; Poisson-scale error bars are
  // conservative here
  const double se = std::sqrt(want / span);
  CHECK(std::abs(intensity - want) < 5.0 * se);
}

TEST_CASE("matern evaluation: floor off bumps, peak at isolated points") {
  const auto spec = test_matern();
  PotentialField f(spec);
  const auto pts = matern_points(spec, 0.0, 200.0);
  REQUIRE(pts.size() > 3);
  const double w = spec.mollifier_width / 2.0;
  // a probe farther than w from every retained point sits on the floor
  double probe = pts[0] + 0.5 * (pts[1] - pts[0]);
  bool clear = true;
  for (double p : pts) clear = clear && std::abs(probe - p) >= w;
  if (clear) {
    CHECK(f.evaluate(probe) == doctest::Approx(spec.ei));
    CHECK(f.evaluate_zeta(probe) == doctest::Approx(-spec.bump_amplitude));
  }
  // retained points are > 1 apart and eps < 1, so every point is isolated
  CHECK(f.evaluate(pts[1]) == doctest::Approx(spec.es));
  CHECK(f.evaluate_zeta(pts[1]) == doctest::Approx(0.0));
  // definition zeta = xi - es holds exactly
  for (double x = -3.0; x < 3.0; x += 0.37)
    CHECK(f.evaluate_zeta(x) == f.evaluate(x) - spec.es);
}

TEST_CASE("shift operator composes and matches re-evaluation") {
  for (auto spec : {test_matern(), PotentialSpec::smoothed(0.5, 2.5, 2.0, 11)}) {
    PotentialField f(spec);
    auto g = f.shifted(2.5);
    CHECK(g.evaluate(0.0) == f.evaluate(2.5));
    auto h0 = f.shifted(0.0);
    auto gg = f.shifted(1.25).shifted(1.25);
    for (double x = -5.0; x <= 5.0; x += 0.617) {
      CHECK(h0.evaluate(x) == f.evaluate(x));
      CHECK(gg.evaluate(x) == f.evaluate(x + 2.5));
      CHECK(g.evaluate(x) == f.evaluate(x + 2.5));
    }
  }
}

TEST_CASE("sample_grid is pointwise evaluate") {
  PotentialField c(PotentialSpec::constant_field(1.0, 0));
  const auto ones = c.sample_grid(-3.0, 0.25, 41);
  for (double v : ones) CHECK(v == 1.0);

  PotentialField f(test_matern());
  auto g = f.shifted(1.5);
  const auto a = f.sample_grid(1.5, 0.1, 64);
  const auto b = g.sample_grid(0.0, 0.1, 64);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  CHECK(f.sample_grid(0.77, 1.0, 1)[0] == f.evaluate(0.77));
}

TEST_CASE("boundedness over a million evaluations") {
  for (auto spec : {test_matern(), PotentialSpec::smoothed(0.5, 2.5, 2.0, 5)}) {
    PotentialField f(spec);
    CounterRng rng(123, 9);
    for (int i = 0; i < 1000000; ++i) {
      const double x = (rng.uniform() - 0.5) * 2000.0;
      const double v = f.evaluate(x);
      REQUIRE(v >= spec.ei);
      REQUIRE(v <= spec.es);
    }
  }
}

TEST_CASE("distributional stationarity across seeds") {
  for (auto base : {test_matern(2.0, 0.5, 0.5, 0), PotentialSpec::smoothed(0.5, 2.5, 2.0, 0)}) {
    std::vector<double> at0, at17;
    for (std::uint64_t s = 0; s < 500; ++s) {
      auto spec = base;
      spec.seed = derive_seed(99, "stationarity", s);
      PotentialField f(spec);
      at0.push_back(f.evaluate(0.0));
      at17.push_back(f.evaluate(17.3));
    }
    const auto m0 = mean_se(at0);
    const auto m17 = mean_se(at17);
    const double z_mean =
        std::abs(m0.mean - m17.mean) / std::sqrt(m0.se * m0.se + m17.se * m17.se);
    CHECK(z_mean < 4.0);
    const double v0 = sample_variance(at0), v17 = sample_variance(at17);
    // variance of the sample variance ~ 2 sigma^4/(n-1) for near-normal data;
    // generous factor for the bumpy marginals here
    const double se_v = std::sqrt(2.0 / 499.0) * std::max(v0, v17) * 2.0;
    CHECK(std::abs(v0 - v17) < 4.0 * se_v + 1e-12);
  }
}

TEST_CASE("finite-range dependency cells are disjoint beyond the mixing range") {
  for (auto spec : {test_matern(), PotentialSpec::smoothed(0.5, 2.5, 2.0, 21)}) {
    PotentialField f(spec);
    const double range = f.dependency_range();
    CounterRng rng(5, 5);
    for (int trial = 0; trial < 2000; ++trial) {
      const double x = (rng.uniform() - 0.5) * 200.0;
      const double y = x + range + 1e-9 + rng.uniform() * 5.0;
      const auto [alo, ahi] = f.dependency_cells(x);
      const auto [blo, bhi] = f.dependency_cells(y);
      CHECK(ahi < blo);  // disjoint index ranges
    }
  }
}

TEST_CASE("grid increments respect the analytic Lipschitz bound") {
  for (auto spec : {test_matern(), PotentialSpec::smoothed(0.5, 2.5, 2.0, 31)}) {
    PotentialField f(spec);
    const double bound = f.lipschitz_bound();
    REQUIRE(bound > 0.0);
    const double dx = 1e-3;
    double worst = 0.0;
    double prev = f.evaluate(-20.0);
    for (long i = 1; i <= 40000; ++i) {
      const double cur = f.evaluate(-20.0 + dx * static_cast<double>(i));
      worst = std::max(worst, std::abs(cur - prev) / dx);
      prev = cur;
    }
    CHECK(worst <= bound);
  }
}

TEST_CASE("evaluation is deterministic regardless of order and caching") {
  const auto spec = test_matern(2.0, 0.5, 0.5, 77);
  PotentialField a(spec);
  PotentialField b(spec);
  // touch b in reverse order first
  std::vector<double> xs;
  CounterRng rng(1, 2);
  for (int i = 0; i < 500; ++i) xs.push_back((rng.uniform() - 0.5) * 300.0);
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) (void)b.evaluate(*it);
  for (double x : xs) CHECK(a.evaluate(x) == b.evaluate(x));
}

TEST_CASE("concurrent evaluation returns identical values") {
  const auto spec = test_matern(2.0, 0.5, 0.5, 13);
  PotentialField f(spec);
  std::vector<double> xs;
  CounterRng rng(4, 4);
  for (int i = 0; i < 2000; ++i) xs.push_back((rng.uniform() - 0.5) * 400.0);
  std::vector<double> out_a(xs.size()), out_b(xs.size());
  auto worker = [&](std::vector<double>& out, bool reverse) {
    if (reverse) {
      for (std::size_t i = xs.size(); i-- > 0;) out[i] = f.evaluate(xs[i]);
    } else {
      for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f.evaluate(xs[i]);
    }
  };
  std::thread t1(worker, std::ref(out_a), false);
  std::thread t2(worker, std::ref(out_b), true);
  t1.join();
  t2.join();
  PotentialField fresh(spec);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double expect = fresh.evaluate(xs[i]);
    CHECK(out_a[i] == expect);
    CHECK(out_b[i] == expect);
  }
}

TEST_CASE("spec validation rejects malformed inputs") {
  CHECK_THROWS(PotentialSpec::matern(0.5, -1.0, 0.5, 0));
  CHECK_THROWS(PotentialSpec::matern(0.5, 1.0, 1.5, 0));  // epsilon outside (0,1)
  CHECK_THROWS(PotentialSpec::smoothed(0.5, 2.5, 0.1, 0, 1.0));  // R < cell
  PotentialSpec s = PotentialSpec::matern(0.5, 1.0, 0.5, 0);
  s.es = 2.0;  // breaks es == ei + a
  CHECK_THROWS(s.validate());
}
