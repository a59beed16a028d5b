// randfront command-line driver: configuration in, CSV/JSON artifacts out.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "randfront/acceptance.hpp"
#include "randfront/bbmre.hpp"
#include "randfront/config.hpp"
#include "randfront/experiments.hpp"
#include "randfront/kpp.hpp"
#include "randfront/pam.hpp"
#include "randfront/rng.hpp"
#include "randfront/util.hpp"

namespace fs = std::filesystem;
using namespace randfront;

namespace {

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string output_override;
  unsigned jobs = 0;
  bool overwrite = false;
};

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = args.config_file.empty() ? RunConfig{} : RunConfig::load(args.config_file);
  for (const auto& ov : args.overrides) cfg.apply_override(ov);
  if (const char* env = std::getenv("RANDFRONT_OUT"); env && *env)
    cfg.output_dir = env;
  if (!args.output_override.empty()) cfg.output_dir = args.output_override;
  if (args.jobs > 0) cfg.experiment.jobs = args.jobs;
  cfg.validate();
  return cfg;
}

fs::path prepare_dir(const RunConfig& cfg, const std::string& sub, bool overwrite) {
  const fs::path dir = fs::path(cfg.output_dir) / sub;
  if (fs::exists(dir)) {
    if (!overwrite)
      throw std::runtime_error("output directory exists (use --overwrite): " +
                               dir.string());
  } else {
    fs::create_directories(dir);
  }
  return dir;
}

Nonlinearity nonlinearity_from(const RunConfig& cfg) {
  const std::string& n = cfg.kpp.nonlinearity;
  if (n == "logistic") return Nonlinearity::logistic();
  if (n.rfind("gm:", 0) == 0) return Nonlinearity::gm(std::stoi(n.substr(3)));
  if (n.rfind("offspring:", 0) == 0)
    return offspring_to_F(OffspringLaw::from_string(n.substr(10)));
  throw std::invalid_argument("unknown nonlinearity: " + n);
}

void write_trajectory(const SolutionTrajectory& traj, const fs::path& dir,
                      double threshold, bool log_form) {
  CsvWriter snap({"t", "x", log_form ? "ln_u" : "w"});
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const auto& s = traj.snapshots[i];
    for (std::size_t j = 0; j < s.values.size(); j += 4) {
      const double x = s.x_left + traj.dx * static_cast<double>(j);
      const double v = log_form
                           ? (s.values[j] > 0.0
                                  ? s.log_offset + std::log(s.values[j])
                                  : -1e308)
                           : s.values[j];
      snap.add_row(std::vector<double>{s.t, x, v});
    }
  }
  snap.write(dir / "snapshots.csv");

  CsvWriter front({"t", "m_bar", "threshold"});
  for (const auto& s : traj.snapshots) {
    double f;
    try {
      f = log_form ? front_pam(traj, threshold, s.t) : front_kpp(traj, threshold, s.t);
    } catch (const std::exception&) {
      f = kFrontNotReached;
    }
    front.add_row(std::vector<double>{s.t, f, threshold});
  }
  front.write(dir / "front.csv");
}

int cmd_gen_env(const RunConfig& cfg, bool overwrite, double x0, double dx, long n) {
  const auto dir = prepare_dir(cfg, "env", overwrite);
  PotentialField field(cfg.potential);
  CsvWriter csv({"x", "xi"});
  for (long i = 0; i < n; ++i) {
    const double x = x0 + dx * static_cast<double>(i);
    csv.add_row(std::vector<double>{x, field.evaluate(x)});
  }
  csv.write(dir / "grid.csv");
  write_text_file(dir / "spec.txt", cfg.serialize());
  std::cout << "wrote " << (dir / "grid.csv").string() << "\n";
  return 0;
}

int cmd_profile(const RunConfig& cfg, bool overwrite) {
  const auto dir = prepare_dir(cfg, "profile", overwrite);
  LyapunovConfig lc = cfg.lyapunov;
  if (lc.jobs == 0) lc.jobs = cfg.experiment.jobs;
  const auto p = build_profile(cfg.potential, cfg.bvp, lc);
  write_text_file(dir / "profile.txt", p.text_report());
  CsvWriter eta({"eta", "L", "L_se", "dL", "d2L"});
  for (std::size_t j = 0; j < p.eta_grid.size(); ++j)
    eta.add_row(std::vector<double>{p.eta_grid[j], p.L_tab[j], p.L_se_tab[j],
                                    p.dL_tab[j], p.d2L_tab[j]});
  eta.write(dir / "eta_table.csv");
  CsvWriter vt({"v", "eta_bar", "legendre_star", "lambda"});
  for (std::size_t k = 0; k < p.v_grid.size(); ++k)
    vt.add_row(std::vector<double>{p.v_grid[k], p.eta_bar_tab[k], p.legendre_tab[k],
                                   p.lambda_tab[k]});
  vt.write(dir / "v_table.csv");
  std::cout << p.text_report();
  return 0;
}

int cmd_solve(const RunConfig& cfg, bool overwrite, bool pam) {
  PotentialField field(cfg.potential);
  if (pam) {
    const auto dir = prepare_dir(cfg, "pam", overwrite);
    const auto traj = solve_pam(field, cfg.pam.ic, cfg.pam.grid, cfg.pam.horizon);
    write_trajectory(traj, dir, cfg.pam.threshold_a, true);
    std::cout << "wrote PAM trajectory under " << dir.string() << "\n";
  } else {
    const auto dir = prepare_dir(cfg, "kpp", overwrite);
    const auto traj =
        solve_kpp(field, nonlinearity_from(cfg), cfg.kpp.ic, cfg.kpp.grid,
                  cfg.kpp.horizon);
    write_trajectory(traj, dir, cfg.kpp.threshold_eps, false);
    std::cout << "wrote F-KPP trajectory under " << dir.string() << "\n";
  }
  return 0;
}

int cmd_bbmre(const RunConfig& cfg, bool overwrite, double x, double t) {
  const auto dir = prepare_dir(cfg, "bbmre", overwrite);
  PotentialField field(cfg.potential);
  const auto law = OffspringLaw::from_string(cfg.bbmre.law);

  CsvWriter csv({"replica", "population", "count_leq_0", "cap_hit"});
  const std::size_t listed = std::min<std::size_t>(cfg.bbmre.reps, 1000);
  for (std::size_t rep = 0; rep < listed; ++rep) {
    const auto sys = simulate(field, law, x, t, cfg.bbmre.cap,
                              derive_seed(cfg.base_seed, "bbmre-rep", rep));
    csv.add_row(std::vector<double>{
        static_cast<double>(rep), static_cast<double>(sys.positions.size()),
        sys.cap_hit ? -1.0 : static_cast<double>(count_leq(sys, 0.0)),
        sys.cap_hit ? 1.0 : 0.0});
  }
  csv.write(dir / "replicas.csv");

  const auto mean_count = estimate_mean_count(field, law, x, t, cfg.bbmre.reps,
                                              cfg.base_seed, cfg.experiment.jobs);
  const auto survival =
      estimate_w(field, law, x, t, cfg.bbmre.reps, cfg.base_seed, cfg.experiment.jobs);
  GridConfig g = cfg.pam.grid;
  const auto u = solve_pam(field, InitialCondition::heaviside(), g, t);
  const auto w = solve_kpp(field, offspring_to_F(law), InitialCondition::heaviside(),
                           cfg.kpp.grid, t);
  const double pde_u = std::exp(u.ln_value(u.snapshot_index(t), x));
  const double pde_w = w.plain_value(w.snapshot_index(t), x);

  nlohmann::ordered_json deltas;
  deltas["x"] = x;
  deltas["t"] = t;
  deltas["mc_mean_count"] = mean_count.mean;
  deltas["mc_mean_count_se"] = mean_count.se;
  deltas["pam_value"] = pde_u;
  deltas["many_to_one_z"] = (mean_count.mean - pde_u) / mean_count.se;
  deltas["mc_survival"] = survival.mean;
  deltas["mc_survival_se"] = survival.se;
  deltas["kpp_value"] = pde_w;
  deltas["mckean_z"] = (survival.mean - pde_w) / survival.se;
  write_text_file(dir / "validation.json", deltas.dump(2) + "\n");
  std::cout << deltas.dump(2) << "\n";
  return 0;
}

int cmd_experiment(const RunConfig& cfg, bool overwrite, const std::string& name) {
  const auto rep = run_experiment(cfg, name);
  const auto dir = prepare_dir(cfg, "experiment-" + rep.name, overwrite);
  rep.write(dir, true);
  std::cout << rep.verdict_lines();
  std::cout << "report under " << dir.string() << "\n";
  return rep.all_pass() ? 0 : 1;
}

int cmd_verify(const RunConfig& cfg, bool overwrite, const std::string& filter) {
  AcceptanceOptions opt;
  opt.jobs = cfg.experiment.jobs;
  opt.filter = filter;
  if (!cfg.output_dir.empty()) {
    opt.report_dir = fs::path(cfg.output_dir) / "acceptance";
    opt.overwrite = overwrite;
    fs::create_directories(opt.report_dir);
  }
  const auto res = run_acceptance(opt, std::cout);
  return res.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randfront: F-KPP / parabolic Anderson front laboratory"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  CommonArgs args;
  app.add_option("-c,--config", args.config_file, "run configuration file");
  app.add_option("--set", args.overrides,
                 "override a config key, e.g. --set pam.dx=0.025");
  app.add_option("-o,--output", args.output_override, "output directory");
  app.add_option("--jobs", args.jobs, "worker cap (0 = hardware)");
  app.add_flag("--overwrite", args.overwrite, "allow writing into existing outputs");

  double env_x0 = 0.0, env_dx = 0.01;
  long env_n = 10001;
  auto* gen = app.add_subcommand("gen-env", "sample the potential to CSV");
  gen->add_option("--x0", env_x0, "grid origin");
  gen->add_option("--dx", env_dx, "grid step");
  gen->add_option("--n", env_n, "grid points");

  auto* prof = app.add_subcommand("profile", "build and serialize the Lyapunov profile");
  auto* spam = app.add_subcommand("solve-pam", "solve the linear equation");
  auto* skpp = app.add_subcommand("solve-kpp", "solve the nonlinear equation");

  double bx = 0.0, bt = 2.0;
  auto* bbm = app.add_subcommand("bbmre", "branching simulation and PDE cross-check");
  bbm->add_option("--x", bx, "start position");
  bbm->add_option("--t", bt, "horizon");

  std::string exp_name;
  auto* exp = app.add_subcommand("experiment", "run a named experiment");
  exp->add_option("name", exp_name, "experiment name")->required();

  std::string filter;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--filter", filter, "run only criteria containing this id");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = load_config(args);
    if (gen->parsed()) return cmd_gen_env(cfg, args.overwrite, env_x0, env_dx, env_n);
    if (prof->parsed()) return cmd_profile(cfg, args.overwrite);
    if (spam->parsed()) return cmd_solve(cfg, args.overwrite, true);
    if (skpp->parsed()) return cmd_solve(cfg, args.overwrite, false);
    if (bbm->parsed()) return cmd_bbmre(cfg, args.overwrite, bx, bt);
    if (exp->parsed()) return cmd_experiment(cfg, args.overwrite, exp_name);
    if (verify->parsed()) return cmd_verify(cfg, args.overwrite, filter);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
