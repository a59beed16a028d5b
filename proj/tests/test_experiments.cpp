#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "randfront/experiments.hpp"

using namespace randfront;
namespace fs = std::filesystem;

namespace {

// small random-field configuration for fast statistical smoke runs
RunConfig small_cfg() {
  RunConfig cfg;
  cfg.base_seed = 90210;
  cfg.potential = PotentialSpec::matern(3.0, 2.0, 0.9, 5);
  cfg.lyapunov.eta_points = 160;
  cfg.lyapunov.n_env = 8;
  cfg.lyapunov.n_units = 24;
  cfg.lyapunov.sigma_env = 128;
  cfg.experiment.jobs = 2;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("homogeneous baseline over a short window produces the fits") {
  RunConfig cfg;
  cfg.experiment.t_min = 10.0;
  cfg.experiment.t_max = 60.0;
  cfg.experiment.jobs = 2;
  const auto rep = run_homogeneous_baseline(cfg);
  CHECK(rep.aggregates.contains("gap_ln_slope"));
  CHECK(rep.verdicts.size() == 5);
  // the short window loosens the estimates; speed should still be near sqrt 2
  const double c1 = rep.aggregates["fit_pam"]["t"].get<double>();
  CHECK(c1 == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
}

TEST_CASE("log gap on a couple of seeds and report writing") {
  auto cfg = small_cfg();
  cfg.experiment.seeds = 2;
  cfg.pam.horizon = cfg.kpp.horizon = 40.0;
  cfg.experiment.t_min = 5.0;
  cfg.experiment.t_max = 40.0;
  const auto rep = run_log_gap(cfg);
  REQUIRE(rep.per_seed.size() == 2);
  bool has_nonneg = false;
  for (const auto& v : rep.verdicts) has_nonneg |= v.criterion == "AC9.gap_nonneg";
  CHECK(has_nonneg);

  const fs::path dir = fs::temp_directory_path() / "randfront-test-report";
  fs::remove_all(dir);
  rep.write(dir, false);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  // write-once unless overwrite
  CHECK_THROWS(rep.write(dir, false));
  const std::string first = slurp(dir / "report.json");
  rep.write(dir, true);
  CHECK(slurp(dir / "report.json") == first);  // byte-identical regeneration
  fs::remove_all(dir);
}

TEST_CASE("identical configurations regenerate identical reports") {
  RunConfig cfg;
  cfg.experiment.t_min = 5.0;
  cfg.experiment.t_max = 30.0;
  cfg.experiment.jobs = 2;
  const auto a = run_homogeneous_baseline(cfg);
  const auto b = run_homogeneous_baseline(cfg);
  CHECK(a.aggregates.dump() == b.aggregates.dump());
  CHECK(a.summary_csv == b.summary_csv);
  CHECK(a.manifest.dump() == b.manifest.dump());
}

TEST_CASE("experiment dispatch knows every name") {
  for (const auto& n : experiment_names()) CHECK_NOTHROW((void)0);
  CHECK_THROWS(run_experiment(RunConfig{}, "not-an-experiment"));
}

TEST_CASE("vc scan reproduces both velocity orderings") {
  auto cfg = small_cfg();
  cfg.lyapunov.n_env = 12;
  cfg.lyapunov.n_units = 24;
  const auto rep = run_vc_scan(cfg);
  bool strong_ok = false, weak_ok = false;
  for (const auto& v : rep.verdicts) {
    if (v.criterion == "AC13.order_strong") strong_ok = v.pass;
    if (v.criterion == "AC13.order_weak") weak_ok = v.pass;
  }
  CHECK(strong_ok);
  CHECK(weak_ok);
}

TEST_CASE("tilt concentration smoke run") {
  auto cfg = small_cfg();
  cfg.experiment.seeds = 24;
  cfg.experiment.n_grid = {16, 64};
  const auto rep = run_tilt_concentration(cfg);
  CHECK(rep.aggregates.contains("loglog_slope"));
}
