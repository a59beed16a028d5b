#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "randfront/kpp.hpp"
#include "randfront/pam.hpp"

using namespace randfront;

TEST_CASE("standard conditions: logistic and the G family pass, violations fail") {
  const auto logi = check_sc(Nonlinearity::logistic());
  CHECK(logi.all_pass());
  CHECK(Nonlinearity::logistic().derivative(0.0) == doctest::Approx(1.0));
  CHECK(Nonlinearity::logistic().derivative(1.0) == doctest::Approx(-1.0));

  CHECK(check_sc(gm_family(3)).all_pass());
  CHECK(check_sc(gm_family(17)).all_pass());

  // constructed violation: F(0.5) < 0 through a table
  std::vector<double> w = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> f = {0.0, 0.1, -0.1, 0.1, 0.0};
  std::vector<double> df = {1.0, 0.2, 0.0, -0.2, -1.0};
  const auto bad = check_sc(Nonlinearity::from_table(w, f, df));
  CHECK_FALSE(bad.all_pass());
}

TEST_CASE("G family: closed form, monotone in n, endpoints") {
  const auto g1 = gm_family(1);
  for (double x = 0.0; x <= 1.0; x += 0.13)
    CHECK(g1(x) == doctest::Approx(x * (1.0 - x)).epsilon(1e-14));

  for (int n : {1, 2, 5, 20}) {
    const auto gn = gm_family(n);
    const auto gn1 = gm_family(n + 1);
    CHECK(gn(1.0) == doctest::Approx(0.0));
    for (double x = 0.0; x <= 1.0; x += 0.0625) CHECK(gn1(x) <= gn(x) + 1e-14);
  }
}

TEST_CASE("dominating_gm selects the smallest dominated member") {
  CHECK(dominating_gm(Nonlinearity::logistic()) == 1);
  CHECK(dominating_gm(gm_family(5)) == 5);
  CHECK(dominating_gm(gm_family(37)) == 37);
  // F'(0) != 1 is rejected at the precondition
  std::vector<double> w, f, df;
  for (int k = 0; k <= 1000; ++k) {
    const double x = 1e-3 * static_cast<double>(k);
    w.push_back(x);
    f.push_back(x * (1.0 - x) * (1.0 + x) / 1.2);
    df.push_back((1.0 + 2.0 * x - 3.0 * x * x) / 1.2);
  }
  CHECK_THROWS(dominating_gm(Nonlinearity::from_table(w, f, df)));
}

TEST_CASE("offspring laws map to standard-condition nonlinearities") {
  const auto fb = offspring_to_F(OffspringLaw::binary());
  for (double u = 0.0; u <= 1.0; u += 0.1)
    CHECK(fb(u) == doctest::Approx(u * (1.0 - u)).epsilon(1e-14));

  const auto f13 = offspring_to_F(OffspringLaw::one_three());
  // F(u) = 1 - u - (1-u)/2 - (1-u)^3/2
  for (double u = 0.0; u <= 1.0; u += 0.1) {
    const double q = 1.0 - u;
    CHECK(f13(u) == doctest::Approx(1.0 - u - 0.5 * q - 0.5 * q * q * q).epsilon(1e-14));
  }
  CHECK(f13.derivative(0.0) == doctest::Approx(1.0));
  CHECK(f13(0.0) == doctest::Approx(0.0));
  CHECK(f13(1.0) == doctest::Approx(0.0));
  CHECK(check_sc(f13).all_pass());

  OffspringLaw bad;
  bad.p = {0.0, 0.5, 0.5};  // mean 1.5
  CHECK_THROWS(offspring_to_F(bad));
}

TEST_CASE("gm offspring laws have mean exactly 2") {
  for (int n : {1, 2, 7, 40}) {
    const auto law = OffspringLaw::gm(n);
    law.validate();
    CHECK(law.mean() == doctest::Approx(2.0).epsilon(1e-15));
  }
  CHECK(OffspringLaw::one_three().second_moment() == doctest::Approx(5.0));
}

TEST_CASE("homogeneous logistic: saturation behind the front and bounds") {
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  GridConfig g;
  const auto traj = solve_kpp(f, Nonlinearity::logistic(),
                              InitialCondition::heaviside(), g, 10.0);
  const auto i10 = traj.snapshot_index(10.0);
  CHECK(traj.plain_value(i10, 0.0) > 0.95);
  for (const auto& s : traj.snapshots)
    for (double w : s.values) {
      CHECK(w >= 0.0);
      CHECK(w <= 1.0);
    }
}

TEST_CASE("homogeneous front at t=100 matches the Bramson expansion") {
  // sqrt(2)*100 - (3/(2 sqrt 2)) ln 100 = 136.54 up to an O(1) constant
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  GridConfig g;
  const auto traj = solve_kpp(f, Nonlinearity::logistic(),
                              InitialCondition::heaviside(), g, 100.0);
  const double fr = front_kpp(traj, 0.5, 100.0);
  CHECK(std::abs(fr - 136.54) < 4.0);
}

TEST_CASE("RK4 reaction path matches the exact logistic substep") {
  PotentialField f(PotentialSpec::matern(0.5, 1.0, 0.5, 7));
  GridConfig g;
  const auto exact = solve_kpp(f, Nonlinearity::logistic(),
                               InitialCondition::heaviside(), g, 4.0);
  // offspring binary law generates u(1-u) but runs through the RK4 branch
  const auto rk4 = solve_kpp(f, offspring_to_F(OffspringLaw::binary()),
                             InitialCondition::heaviside(), g, 4.0);
  const auto ie = exact.snapshot_index(4.0);
  const auto ir = rk4.snapshot_index(4.0);
  for (double x = -2.0; x <= 6.0; x += 0.7)
    CHECK(exact.plain_value(ie, x) ==
          doctest::Approx(rk4.plain_value(ir, x)).epsilon(1e-6));
}

TEST_CASE("comparison in F and in the initial datum") {
  PotentialField f(PotentialSpec::matern(0.5, 1.0, 0.5, 15));
  GridConfig g;
  const auto w_logistic = solve_kpp(f, Nonlinearity::logistic(),
                                    InitialCondition::heaviside(), g, 5.0);
  const auto w_g3 = solve_kpp(f, gm_family(3), InitialCondition::heaviside(), g, 5.0);
  // G_3 <= G_1 pointwise, comparison principle orders the solutions
  for (std::size_t i = 0; i < w_logistic.snapshots.size(); ++i) {
    for (double x = -2.0; x <= 4.0; x += 0.51) {
      if (!w_logistic.x_in_window(i, x) || !w_g3.x_in_window(i, x)) continue;
      CHECK(w_logistic.plain_value(i, x) >= w_g3.plain_value(i, x) - 1e-8);
    }
  }
  const auto w_box = solve_kpp(f, Nonlinearity::logistic(),
                               InitialCondition::box(0.5), g, 5.0);
  for (std::size_t i = 0; i < w_logistic.snapshots.size(); ++i) {
    for (double x = -2.0; x <= 4.0; x += 0.51) {
      if (!w_logistic.x_in_window(i, x) || !w_box.x_in_window(i, x)) continue;
      CHECK(w_logistic.plain_value(i, x) >= w_box.plain_value(i, x) - 1e-8);
    }
  }
}

TEST_CASE("PAM dominates F-KPP for shared heaviside data") {
  PotentialField f(PotentialSpec::matern(0.5, 1.0, 0.5, 21));
  GridConfig g;
  const auto u = solve_pam(f, InitialCondition::heaviside(), g, 5.0);
  const auto w = solve_kpp(f, Nonlinearity::logistic(),
                           InitialCondition::heaviside(), g, 5.0);
  for (std::size_t i = 0; i < u.snapshots.size(); ++i) {
    for (double x = -2.0; x <= 4.0; x += 0.37) {
      if (!u.x_in_window(i, x) || !w.x_in_window(i, x)) continue;
      const double wv = w.plain_value(i, x);
      if (wv <= 0.0) continue;
      CHECK(u.ln_value(i, x) >= std::log(wv) - 1e-8);
    }
  }
}

TEST_CASE("kpp fronts: t=0 anchor, level nesting, total variation") {
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  GridConfig g;
  const auto traj = solve_kpp(f, Nonlinearity::logistic(),
                              InitialCondition::heaviside(), g, 6.0);
  CHECK(std::abs(front_kpp(traj, 0.4, 0.0)) <= traj.dx + 1e-12);
  CHECK(front_kpp(traj, 0.1, 6.0) >= front_kpp(traj, 0.9, 6.0));
  // monotone data keep total variation 1
  const auto& last = traj.snapshots.back();
  double tv = 0.0;
  for (std::size_t j = 1; j < last.values.size(); ++j)
    tv += std::abs(last.values[j] - last.values[j - 1]);
  CHECK(tv == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("scaled-heaviside data are rejected for the bounded equation") {
  PotentialField f(PotentialSpec::constant_field(1.0, 0));
  GridConfig g;
  CHECK_THROWS(solve_kpp(f, Nonlinearity::logistic(),
                         InitialCondition::scaled_heaviside(2.0), g, 1.0));
}
