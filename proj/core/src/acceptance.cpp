#include "randfront/acceptance.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "randfront/bbmre.hpp"
#include "randfront/kpp.hpp"
#include "randfront/pam.hpp"
#include "randfront/parallel.hpp"
#include "randfront/rng.hpp"
#include "randfront/util.hpp"

namespace randfront {

namespace {

constexpr std::uint64_t kAcceptanceSeed = 424243;

// Random medium used by the statistical experiments. Floor well above the
// bump amplitude keeps v0 > vc with margin while the wide bumps carry enough
// variance for non-degenerate limit laws.
RunConfig clt_config(unsigned jobs) {
  RunConfig c;
  c.base_seed = kAcceptanceSeed;
  c.potential = PotentialSpec::matern(3.0, 2.0, 0.9, 101);
  c.lyapunov.n_env = 64;
  c.lyapunov.n_units = 64;
  c.lyapunov.sigma_env = 1024;
  c.lyapunov.lag_cutoff = 12;
  c.experiment.jobs = jobs;
  // Front threshold for the CLT experiments. Thm 1.3 holds for every fixed
  // level M; this value centres the finite-n statistic by absorbing the
  // deterministic -(1/2) ln n prefactor of ln u at v0 n (calibrated once on
  // two pilot seed streams disjoint from the acceptance stream).
  c.pam.threshold_a = 0.0645;
  c.kpp.threshold_eps = 0.5;
  return c;
}

// Milder medium for the exact-large-deviation diagnostic: x L*(1/v) stays
// within double range up to x = 400.
RunConfig diag_config(unsigned jobs) {
  RunConfig c;
  c.base_seed = kAcceptanceSeed + 1;
  c.potential = PotentialSpec::matern(1.5, 1.0, 0.9, 7);
  c.lyapunov.n_env = 48;
  c.lyapunov.n_units = 48;
  c.lyapunov.sigma_env = 256;
  c.experiment.jobs = jobs;
  c.experiment.seeds = 3;
  return c;
}

PotentialField bbmre_random_field() {
  return PotentialField(PotentialSpec::matern(0.5, 1.0, 0.5, 11));
}

struct Runner {
  const AcceptanceOptions& opt;
  std::ostream& log;
  AcceptanceResult result;

  bool enabled(const std::string& group) const {
    return opt.filter.empty() || group == opt.filter;
  }

  void add(const Verdict& v) {
    result.verdicts.push_back(v);
    log << (v.pass ? "[PASS] " : "[FAIL] ") << v.criterion << "  value="
        << format_double(v.value);
    if (v.lo != 0.0 || v.hi != 0.0)
      log << "  band=[" << format_double(v.lo) << ", " << format_double(v.hi) << "]";
    if (!v.note.empty()) log << "  (" << v.note << ")";
    log << "\n" << std::flush;
  }

  void add(std::string id, bool pass, double value, double lo, double hi,
           std::string note = {}) {
    add(Verdict{std::move(id), pass, value, lo, hi, std::move(note)});
  }

  void absorb(const ExperimentReport& rep, const std::string& prefix) {
    for (const auto& v : rep.verdicts)
      if (v.criterion.rfind(prefix, 0) == 0) add(v);
    if (!opt.report_dir.empty())
      rep.write(opt.report_dir / rep.name, opt.overwrite);
  }
};

// ---------------------------------------------------------------------------

void ac1_closed_form_suite(Runner& r) {
  if (!r.enabled("AC1")) return;
  BvpConfig bvp;
  LyapunovConfig lc;
  lc.n_env = 2;
  lc.n_units = 2;
  lc.sigma_env = 8;
  lc.jobs = r.opt.jobs;
  const auto p = build_profile(PotentialSpec::constant_field(1.0, 0), bvp, lc);

  double worst_l = 0.0;
  for (std::size_t j = 0; j < p.eta_grid.size(); ++j) {
    const double eta = p.eta_grid[j];
    if (eta < -5.0 || eta > -0.05) continue;
    const double want = -std::sqrt(-2.0 * eta);
    worst_l = std::max(worst_l, std::abs(p.L_tab[j] - want) / std::abs(want));
  }
  r.add("AC1.L_closed_form", worst_l <= 1e-4, worst_l, 0.0, 1e-4,
        "max relative error of L(eta) = -sqrt(-2 eta), eta in [-5,-0.05]");

  double worst_eb = 0.0, worst_star = 0.0, worst_lam = 0.0;
  for (double v : {1.0, std::sqrt(2.0), 2.0}) {
    worst_eb = std::max(worst_eb,
                        std::abs(p.eta_bar(v) + 0.5 * v * v) / (0.5 * v * v));
    worst_star =
        std::max(worst_star, std::abs(p.legendre_star(v) - 0.5 * v) / (0.5 * v));
    const double lam_want = 1.0 - 0.5 * v * v;
    const double denom = std::max(std::abs(lam_want), 1.0);
    worst_lam = std::max(worst_lam, std::abs(p.lambda(v) - lam_want) / denom);
  }
  r.add("AC1.eta_bar", worst_eb <= 1e-3, worst_eb, 0.0, 1e-3,
        "eta_bar(v) = -v^2/2");
  r.add("AC1.legendre", worst_star <= 1e-3, worst_star, 0.0, 1e-3,
        "L*(1/v) = v/2");
  r.add("AC1.lambda", worst_lam <= 1e-3, worst_lam, 0.0, 1e-3,
        "Lambda(v) = es - v^2/2, Lambda(0) = es");
  r.add("AC1.v0", std::abs(p.v0 - std::sqrt(2.0)) <= 1e-3 * std::sqrt(2.0), p.v0,
        std::sqrt(2.0) * 0.999, std::sqrt(2.0) * 1.001, "v0 = sqrt(2 es)");
  r.add("AC1.v0_variational",
        std::abs(p.v0_variational - std::sqrt(2.0)) <= 1e-3 * std::sqrt(2.0),
        p.v0_variational, std::sqrt(2.0) * 0.999, std::sqrt(2.0) * 1.001);
  r.add("AC1.vc", std::abs(p.vc) <= 1e-3, p.vc, 0.0, 1e-3, "vc = 0 for es = ei");
  r.add("AC1.sigma", p.sigma2_v0 == 0.0 && p.sigma_tilde2 == 0.0, p.sigma2_v0, 0.0,
        0.0, "variance constants vanish exactly");

  LyapunovConfig lc2 = lc;
  const auto p2 = build_profile(PotentialSpec::constant_field(2.5, 0), bvp, lc2);
  r.add("AC1.v0_scaling", std::abs(p2.v0 - std::sqrt(5.0)) <= 1e-3 * std::sqrt(5.0),
        p2.v0, std::sqrt(5.0) * 0.999, std::sqrt(5.0) * 1.001, "es = 2.5");
}

void ac2_v0_cross_oracle(Runner& r) {
  if (!r.enabled("AC2")) return;
  const RunConfig base = clt_config(r.opt.jobs);
  BvpConfig bvp = base.bvp;
  LyapunovConfig lc;
  lc.eta_points = 240;
  lc.n_env = 16;
  lc.n_units = 32;
  lc.sigma_env = 16;
  lc.jobs = r.opt.jobs;
  double worst = 0.0;
  for (int s = 0; s < 10; ++s) {
    PotentialSpec spec = base.potential;
    spec.seed = derive_seed(kAcceptanceSeed, "ac2-seed", static_cast<std::uint64_t>(s));
    const auto p = build_profile(spec, bvp, lc);
    worst = std::max(worst, std::abs(p.v0 - p.v0_variational) / p.v0);
  }
  r.add("AC2.v0_routes", worst <= 0.01, worst, 0.0, 0.01,
        "Lambda root vs variational formula over 10 seeds");
}

struct ProbePde {
  SolutionTrajectory pam;
  SolutionTrajectory kpp;
};

ProbePde solve_probe_pdes(const PotentialField& field) {
  GridConfig g;
  g.dx = 0.025;
  g.dt = 0.005;
  g.snapshot_dt = 0.5;
  ProbePde out;
  out.pam = solve_pam(field, InitialCondition::heaviside(), g, 2.0);
  out.kpp = solve_kpp(field, offspring_to_F(OffspringLaw::binary()),
                      InitialCondition::heaviside(), g, 2.0);
  return out;
}

void ac3_ac4_branching_agreement(Runner& r) {
  const bool run3 = r.enabled("AC3"), run4 = r.enabled("AC4");
  if (!run3 && !run4) return;
  const auto law = OffspringLaw::binary();
  double worst_mean = 0.0, worst_w = 0.0;
  int idx = 0;
  for (const auto& field :
       {PotentialField(PotentialSpec::constant_field(1.0, 0)), bbmre_random_field()}) {
    const auto pde = solve_probe_pdes(field);
    for (double t : {1.0, 2.0}) {
      for (double x : {0.0, 1.0, 2.0}) {
        const auto seed = derive_seed(kAcceptanceSeed, "ac34", idx++);
        if (run3) {
          const auto est = estimate_mean_count(field, law, x, t, 100000, seed,
                                               r.opt.jobs);
          const double pdeu = std::exp(pde.pam.ln_value(pde.pam.snapshot_index(t), x));
          worst_mean = std::max(worst_mean, std::abs(est.mean - pdeu) / est.se);
        }
        if (run4) {
          const auto est = estimate_w(field, law, x, t, 100000, seed, r.opt.jobs);
          const double pdew = pde.kpp.plain_value(pde.kpp.snapshot_index(t), x);
          worst_w = std::max(worst_w, std::abs(est.mean - pdew) / est.se);
        }
      }
    }
  }
  if (run3)
    r.add("AC3.many_to_one", worst_mean <= 3.0, worst_mean, 0.0, 3.0,
          "worst |BBMRE mean count - PAM| in MC standard errors");
  if (run4)
    r.add("AC4.mckean", worst_w <= 3.0, worst_w, 0.0, 3.0,
          "worst |survival probability - F-KPP| in MC standard errors");
}

void ac5_many_to_two(Runner& r) {
  if (!r.enabled("AC5")) return;
  const double inf = std::numeric_limits<double>::infinity();
  PotentialField cf(PotentialSpec::constant_field(1.0, 0));
  double worst = 0.0;
  int idx = 0;
  for (double t : {1.0, 2.0}) {
    for (int barrier = 0; barrier < 2; ++barrier) {
      const double lo = barrier == 0 ? -inf : -1.0;
      const double hi = barrier == 0 ? inf : 1.0;
      const auto tm = tube_moments(cf, OffspringLaw::binary(), 0.0, t, lo, hi, 80000,
                                   derive_seed(kAcceptanceSeed, "ac5", idx++),
                                   r.opt.jobs);
      worst = std::max(worst, std::abs(tm.mc_second.mean - tm.fk2) / tm.mc_second.se);
      worst = std::max(worst, std::abs(tm.mc_first.mean - tm.fk1) / tm.mc_first.se);
    }
  }
  r.add("AC5.many_to_two", worst <= 3.0, worst, 0.0, 3.0,
        "tube count moments vs the killed-PAM quadrature, binary law");
}

void ac6_feynman_kac_mc(Runner& r) {
  if (!r.enabled("AC6")) return;
  double worst = 0.0;
  int idx = 0;
  for (const auto& field :
       {PotentialField(PotentialSpec::constant_field(1.0, 0)), bbmre_random_field()}) {
    const auto pde = solve_probe_pdes(field);
    for (double x : {0.0, 1.0}) {
      const auto est =
          fk_mc_pam(field, 2.0, x, InitialCondition::heaviside(), 100000, 0.005,
                    derive_seed(kAcceptanceSeed, "ac6", idx++), r.opt.jobs);
      const double pdeu = std::exp(pde.pam.ln_value(pde.pam.snapshot_index(2.0), x));
      worst = std::max(worst, std::abs(est.mean - pdeu) / est.se);
    }
  }
  r.add("AC6.fk_mc", worst <= 3.0, worst, 0.0, 3.0,
        "path-integral Monte Carlo vs the PAM solver at t=2");
}

void ac7_homogeneous(Runner& r) {
  if (!r.enabled("AC7")) return;
  RunConfig cfg = clt_config(r.opt.jobs);
  cfg.potential = PotentialSpec::constant_field(1.0, 0);
  cfg.pam.threshold_a = 0.5;
  cfg.kpp.threshold_eps = 0.5;
  cfg.experiment.t_min = 20.0;
  cfg.experiment.t_max = 200.0;
  r.absorb(run_homogeneous_baseline(cfg), "AC7");
}

void ac8_front_speed(Runner& r) {
  if (!r.enabled("AC8")) return;
  RunConfig cfg = clt_config(r.opt.jobs);
  const auto& profile = shared_profile(cfg);
  double worst = 0.0;
  std::vector<double> ratios(10);
  parallel_for(10, r.opt.jobs, [&](std::size_t i) {
    PotentialSpec spec = cfg.potential;
    spec.seed = derive_seed(cfg.base_seed, "experiment-env", i);
    PotentialField field(spec);
    GridConfig g = cfg.pam.grid;
    g.snapshot_dt = 1.0;
    g.track_level = cfg.pam.threshold_a;
    const auto u = solve_pam(field, InitialCondition::heaviside(), g, 200.0);
    ratios[i] = front_pam(u, cfg.pam.threshold_a, 200.0) / 200.0;
  });
  for (double ratio : ratios)
    worst = std::max(worst, std::abs(ratio - profile.v0) / profile.v0);
  r.add("AC8.front_speed", worst <= 0.05, worst, 0.0, 0.05,
        "worst |m_bar(200)/200 - v0| / v0 over 10 seeds");
}

void ac9_log_gap(Runner& r) {
  if (!r.enabled("AC9")) return;
  RunConfig cfg = clt_config(r.opt.jobs);
  cfg.pam.horizon = cfg.kpp.horizon = 300.0;
  cfg.pam.threshold_a = 0.5;
  cfg.kpp.threshold_eps = 0.5;  // M = eps with shared heaviside data
  cfg.experiment.seeds = 10;
  cfg.experiment.t_min = 20.0;
  cfg.experiment.t_max = 300.0;
  r.absorb(run_log_gap(cfg), "AC9");
}

void ac10_tilt(Runner& r) {
  if (!r.enabled("AC10")) return;
  RunConfig cfg = clt_config(r.opt.jobs);
  cfg.experiment.seeds = 200;
  cfg.experiment.n_grid = {25, 50, 100, 200, 400};
  r.absorb(run_tilt_concentration(cfg), "AC10");
}

void ac11_front_clt(Runner& r) {
  if (!r.enabled("AC11")) return;
  RunConfig cfg = clt_config(r.opt.jobs);
  cfg.experiment.seeds = 300;
  cfg.experiment.n_grid = {50, 100, 200};
  r.absorb(run_front_clt(cfg), "AC11");
}

void ac12_exact_ld(Runner& r) {
  if (!r.enabled("AC12")) return;
  RunConfig cfg = diag_config(r.opt.jobs);
  cfg.experiment.x_grid = {50, 100, 150, 200, 250, 300, 350, 400};
  r.absorb(run_exact_ld_diag(cfg), "AC12");
}

void ac13_vc_scan(Runner& r) {
  if (!r.enabled("AC13")) return;
  RunConfig cfg = clt_config(r.opt.jobs);
  cfg.lyapunov.n_env = 48;
  cfg.lyapunov.n_units = 48;
  r.absorb(run_vc_scan(cfg), "AC13");
}

void ac14_invariants(Runner& r) {
  if (!r.enabled("AC14")) return;
  CounterRng rng(5, 5);
  // boundedness over 1e6 evaluations per random construction
  {
    bool ok = true;
    for (auto spec : {PotentialSpec::matern(0.5, 2.0, 0.5, 7),
                      PotentialSpec::smoothed(0.5, 2.5, 2.0, 7)}) {
      PotentialField f(spec);
      for (int i = 0; i < 1000000 && ok; ++i) {
        const double x = (rng.uniform() - 0.5) * 2000.0;
        const double v = f.evaluate(x);
        ok = ok && v >= spec.ei && v <= spec.es;
      }
    }
    r.add("AC14.bounded", ok, ok ? 1.0 : 0.0, 0.0, 0.0,
          "1e6 evaluations inside [ei, es] per construction");
  }

  PotentialField field(PotentialSpec::matern(0.5, 1.0, 0.5, 21));
  GridConfig g;
  g.snapshot_dt = 1.0;
  const auto u = solve_pam(field, InitialCondition::heaviside(), g, 8.0);
  const auto wF = solve_kpp(field, Nonlinearity::logistic(),
                            InitialCondition::heaviside(), g, 8.0);
  const auto wG = solve_kpp(field, gm_family(3), InitialCondition::heaviside(), g, 8.0);

  // comparison in F: logistic dominates G_3
  {
    double worst = 0.0;
    for (std::size_t i = 0; i < wF.snapshots.size(); ++i)
      for (double x = -2.0; x <= 4.0; x += 0.37)
        if (wF.x_in_window(i, x) && wG.x_in_window(i, x))
          worst = std::max(worst, wG.plain_value(i, x) - wF.plain_value(i, x));
    r.add("AC14.compare_F", worst <= 1e-8, worst, 0.0, 1e-8,
          "w^F >= w^G for F >= G (logistic vs G_3)");
  }
  // domination of F-KPP by PAM for shared heaviside data
  {
    double worst = -1e300;
    for (std::size_t i = 0; i < u.snapshots.size(); ++i)
      for (double x = -2.0; x <= 4.0; x += 0.37)
        if (u.x_in_window(i, x) && wF.x_in_window(i, x)) {
          const double wv = wF.plain_value(i, x);
          if (wv > 0.0)
            worst = std::max(worst, std::log(wv) - u.ln_value(i, x));
        }
    r.add("AC14.domination", worst <= 1e-8, worst, 0.0, 1e-8,
          "ln w - ln u <= 0 on shared snapshots");
  }
  // two-factor growth monotonicity and Harnack bound
  {
    double worst_growth = -1e300, worst_harnack = -1e300;
    const double harnack_c =
        std::exp(field.spec().es) * std::sqrt(2.0 / std::exp(1.0));
    for (std::size_t i = 1; i + 1 < u.snapshots.size(); ++i)
      for (double x = -3.0; x <= 3.0; x += 0.5) {
        if (!u.x_in_window(i, x) || !u.x_in_window(i + 1, x)) continue;
        worst_growth = std::max(
            worst_growth, u.ln_value(i, x) - u.ln_value(i + 1, x) - std::log(2.0));
        if (!u.x_in_window(i + 1, x - 1.0) || !u.x_in_window(i + 1, x + 1.0)) continue;
        double inf_next = 1e300;
        for (double z = x - 1.0; z <= x + 1.0 + 1e-12; z += 0.25)
          inf_next = std::min(inf_next, u.ln_value(i + 1, z));
        worst_harnack = std::max(
            worst_harnack, u.ln_value(i, x) - std::log(harnack_c) - inf_next);
      }
    r.add("AC14.growth", worst_growth <= 1e-6, worst_growth, 0.0, 1e-6,
          "u(s,x) <= 2 u(t,x) for s <= t");
    r.add("AC14.harnack", worst_harnack <= 1e-6, worst_harnack, 0.0, 1e-6,
          "u(t,y) <= e^{es} sqrt(2/e) inf u(t+1, y+-1)");
  }
  // grid convergence of ln u at probe points
  {
    GridConfig fine = g;
    fine.dx = g.dx / 2.0;
    fine.dt = g.dt / 2.0;
    const auto a = solve_pam(field, InitialCondition::heaviside(), g, 2.0);
    const auto b = solve_pam(field, InitialCondition::heaviside(), fine, 2.0);
    double worst = 0.0;
    for (double x : {-1.0, 0.0, 1.0, 2.0})
      worst = std::max(worst, std::abs(a.ln_value(a.snapshot_index(2.0), x) -
                                       b.ln_value(b.snapshot_index(2.0), x)));
    r.add("AC14.grid_convergence", worst < 1e-3, worst, 0.0, 1e-3,
          "halving dx and dt moves ln u by less than 1e-3");
  }
}

}  // namespace

bool AcceptanceResult::all_pass() const {
  for (const auto& v : verdicts)
    if (!v.pass) return false;
  return true;
}

AcceptanceResult run_acceptance(const AcceptanceOptions& opt, std::ostream& log) {
  Runner r{opt, log, {}};
  ac1_closed_form_suite(r);
  ac2_v0_cross_oracle(r);
  ac3_ac4_branching_agreement(r);
  ac5_many_to_two(r);
  ac6_feynman_kac_mc(r);
  ac7_homogeneous(r);
  ac8_front_speed(r);
  ac9_log_gap(r);
  ac10_tilt(r);
  ac11_front_clt(r);
  ac12_exact_ld(r);
  ac13_vc_scan(r);
  ac14_invariants(r);
  log << (r.result.all_pass() ? "acceptance: ALL PASS" : "acceptance: FAILURES PRESENT")
      << " (" << r.result.verdicts.size() << " clauses)\n";
  return r.result;
}

}  // namespace randfront
