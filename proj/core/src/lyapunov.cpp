#include "randfront/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "randfront/parallel.hpp"
#include "randfront/rng.hpp"
#include "randfront/util.hpp"

namespace randfront {

namespace {

PotentialSpec env_replica(const PotentialSpec& base, std::string_view component,
                          long index) {
  PotentialSpec s = base;
  s.seed = derive_seed(base.seed, component, static_cast<std::uint64_t>(index));
  return s;
}

// Quadratic extrapolation to eta = 0- in the variable s = sqrt(-eta). The
// three support points are geometric in s (s1, ~2 s1, ~4 s1 with s1 at the
// grid end) rather than adjacent grid nodes: adjacent nodes cluster and
// amplify table noise by the squared lever arm. Exact for the constant
// potential, where both L and 1/L' are smooth functions of s.
double extrapolate_to_zero(const std::vector<double>& eta,
                           const std::vector<double>& val) {
  const std::size_t n = eta.size();
  if (n < 3) throw std::invalid_argument("extrapolate_to_zero: need three points");
  const double eta1 = eta[n - 1];
  auto nearest = [&](double target) {
    std::size_t best = 0;
    double dist = 1e300;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::abs(eta[j] - target);
      if (d < dist) {
        dist = d;
        best = j;
      }
    }
    return best;
  };
  std::size_t idx[3] = {nearest(16.0 * eta1), nearest(4.0 * eta1), n - 1};
  if (idx[0] == idx[1] || idx[1] == idx[2]) {  // coarse grid fallback
    idx[0] = n - 3;
    idx[1] = n - 2;
    idx[2] = n - 1;
  }
  double s[3], y[3];
  for (int k = 0; k < 3; ++k) {
    s[k] = std::sqrt(-eta[idx[k]]);
    y[k] = val[idx[k]];
  }
  // Lagrange value at s = 0.
  double out = 0.0;
  for (int k = 0; k < 3; ++k) {
    double term = y[k];
    for (int j = 0; j < 3; ++j) {
      if (j == k) continue;
      term *= (0.0 - s[j]) / (s[k] - s[j]);
    }
    out += term;
  }
  return out;
}

}  // namespace

void LyapunovConfig::validate() const {
  if (!(eta_min < eta_max && eta_max < 0.0))
    throw std::invalid_argument("lyapunov: eta grid must satisfy eta_min < eta_max < 0");
  if (eta_points < 8) throw std::invalid_argument("lyapunov: eta_points too small");
  if (n_env < 1 || n_units < 1 || sigma_env < 1)
    throw std::invalid_argument("lyapunov: replica counts must be positive");
  if (lag_cutoff < 1) throw std::invalid_argument("lyapunov: lag_cutoff must be >= 1");
  if (!(v_lo_factor > 0.0 && v_hi_factor > v_lo_factor))
    throw std::invalid_argument("lyapunov: bad velocity window factors");
  if (v_points < 2) throw std::invalid_argument("lyapunov: v_points too small");
}

MeanSe expected_log_mgf(const PotentialSpec& spec, double eta, long n_env,
                        long n_units, const BvpConfig& bvp, unsigned jobs) {
  spec.validate();
  bvp.validate();
  std::vector<double> env_means(static_cast<std::size_t>(n_env), 0.0);
  parallel_for(static_cast<std::size_t>(n_env), jobs, [&](std::size_t e) {
    PotentialField field(env_replica(spec, "profile-env", static_cast<long>(e)));
    ZetaGrid grid(field, n_units, bvp);
    double sum = 0.0;
    for (long i = 1; i <= n_units; ++i) sum += grid.log_mgf_unit(i, eta);
    env_means[e] = sum / static_cast<double>(n_units);
  });
  return mean_se(env_means);
}

double LyapunovProfile::L_at(double eta) const { return (*L_interp_)(eta); }
double LyapunovProfile::dL_at(double eta) const { return (*dL_interp_)(eta); }

double LyapunovProfile::eta_bar(double v) const {
  if (!(v > 0.0)) throw std::invalid_argument("eta_bar: v must be positive");
  const double target = 1.0 / v;
  double lo = eta_grid.front(), hi = eta_grid.back();
  if (dL_at(hi) < target)
    throw std::domain_error("eta_bar: below critical velocity (no root of L' = 1/v)");
  if (dL_at(lo) > target)
    throw std::domain_error("eta_bar: v too large for the eta grid");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (dL_at(mid) > target)
      hi = mid;
    else
      lo = mid;
    if (std::abs(dL_at(mid) * v - 1.0) < 1e-12) return mid;
  }
  return 0.5 * (lo + hi);
}

double LyapunovProfile::legendre_star(double v) const {
  const double eb = eta_bar(v);
  return eb / v - L_at(eb);
}

double LyapunovProfile::legendre_star_by_sup(double v) const {
  const auto obj = [&](double eta) { return eta / v - L_at(eta); };
  std::size_t best = 0;
  double best_val = obj(eta_grid[0]);
  for (std::size_t j = 1; j < eta_grid.size(); ++j) {
    const double r = obj(eta_grid[j]);
    if (r > best_val) {
      best_val = r;
      best = j;
    }
  }
  double a = eta_grid[best == 0 ? 0 : best - 1];
  double b = eta_grid[std::min(best + 1, eta_grid.size() - 1)];
  const double gr = 0.61803398874989484820;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  for (int it = 0; it < 120; ++it) {
    if (obj(c) > obj(d))
      b = d;
    else
      a = c;
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  return obj(0.5 * (a + b));
}

double LyapunovProfile::lambda(double v) const {
  if (!(v >= 0.0)) throw std::invalid_argument("lambda: v must be >= 0");
  const double vc_grid = 1.0 / dL_at(eta_grid.back());
  if (v <= std::max(vc, vc_grid)) return spec.es + v * L0;
  return spec.es - v * legendre_star(v);
}

namespace {

struct EnvTables {
  // per eta: sums over units of L, L', L''
  std::vector<double> L, dL, d2L;
};

}  // namespace

LyapunovProfile build_profile(const PotentialSpec& spec, const BvpConfig& bvp,
                              const LyapunovConfig& cfg) {
  spec.validate();
  bvp.validate();
  cfg.validate();

  LyapunovProfile p;
  p.spec = spec;
  p.bvp = bvp;
  p.cfg = cfg;

  const long m = cfg.eta_points;
  p.eta_grid.resize(static_cast<std::size_t>(m));
  const double la = std::log(-cfg.eta_min), lb = std::log(-cfg.eta_max);
  for (long j = 0; j < m; ++j) {
    const double u = static_cast<double>(j) / static_cast<double>(m - 1);
    p.eta_grid[static_cast<std::size_t>(j)] = -std::exp(la + u * (lb - la));
  }
  p.eta_grid.front() = cfg.eta_min;
  p.eta_grid.back() = cfg.eta_max;

  // ---- eta tables over environment replicas --------------------------------
  std::vector<EnvTables> env(static_cast<std::size_t>(cfg.n_env));
  parallel_for(static_cast<std::size_t>(cfg.n_env), cfg.jobs, [&](std::size_t e) {
    PotentialField field(env_replica(spec, "profile-env", static_cast<long>(e)));
    ZetaGrid grid(field, cfg.n_units, bvp);
    EnvTables t;
    t.L.assign(static_cast<std::size_t>(m), 0.0);
    t.dL.assign(static_cast<std::size_t>(m), 0.0);
    t.d2L.assign(static_cast<std::size_t>(m), 0.0);
    for (long j = 0; j < m; ++j) {
      const double eta = p.eta_grid[static_cast<std::size_t>(j)];
      const double h = bvp.eta_fd_step * std::abs(eta);
      for (long i = 1; i <= cfg.n_units; ++i) {
        const double l0 = grid.log_mgf_unit(i, eta);
        const double lm = grid.log_mgf_unit(i, eta - h);
        const double lm2 = grid.log_mgf_unit(i, eta - 0.5 * h);
        const double lp2 = grid.log_mgf_unit(i, eta + 0.5 * h);
        const double lp = grid.log_mgf_unit(i, eta + h);
        const double d_h = (lp - lm) / (2.0 * h);
        const double d_h2 = (lp2 - lm2) / h;
        const double s_h = (lp - 2.0 * l0 + lm) / (h * h);
        const double s_h2 = (lp2 - 2.0 * l0 + lm2) / (0.25 * h * h);
        t.L[static_cast<std::size_t>(j)] += l0;
        t.dL[static_cast<std::size_t>(j)] += (4.0 * d_h2 - d_h) / 3.0;
        t.d2L[static_cast<std::size_t>(j)] += (4.0 * s_h2 - s_h) / 3.0;
      }
    }
    env[e] = std::move(t);
  });

  const double unit_count = static_cast<double>(cfg.n_units);
  p.L_tab.assign(static_cast<std::size_t>(m), 0.0);
  p.L_se_tab.assign(static_cast<std::size_t>(m), 0.0);
  p.dL_tab.assign(static_cast<std::size_t>(m), 0.0);
  p.d2L_tab.assign(static_cast<std::size_t>(m), 0.0);
  std::vector<double> env_mean(static_cast<std::size_t>(cfg.n_env));
  for (long j = 0; j < m; ++j) {
    for (std::size_t e = 0; e < env.size(); ++e)
      env_mean[e] = env[e].L[static_cast<std::size_t>(j)] / unit_count;
    const MeanSe ms = mean_se(env_mean);
    p.L_tab[static_cast<std::size_t>(j)] = ms.mean;
    p.L_se_tab[static_cast<std::size_t>(j)] = ms.se;
    double s1 = 0.0, s2 = 0.0;
    for (const auto& t : env) {
      s1 += t.dL[static_cast<std::size_t>(j)];
      s2 += t.d2L[static_cast<std::size_t>(j)];
    }
    p.dL_tab[static_cast<std::size_t>(j)] =
        s1 / (unit_count * static_cast<double>(cfg.n_env));
    p.d2L_tab[static_cast<std::size_t>(j)] =
        s2 / (unit_count * static_cast<double>(cfg.n_env));
  }

  p.L_interp_ = std::make_shared<MonotoneCubic>(p.eta_grid, p.L_tab);
  p.dL_interp_ = std::make_shared<MonotoneCubic>(p.eta_grid, p.dL_tab);

  // ---- limits at eta -> 0- and the velocities ------------------------------
  p.L0 = extrapolate_to_zero(p.eta_grid, p.L_tab);
  std::vector<double> inv_slope(p.dL_tab.size());
  for (std::size_t j = 0; j < p.dL_tab.size(); ++j) inv_slope[j] = 1.0 / p.dL_tab[j];
  p.dL0 = std::max(0.0, extrapolate_to_zero(p.eta_grid, inv_slope));
  p.vc = p.dL0;

  // v0 as the sign change of Lambda; expand the bracket until found.
  {
    double hi = std::sqrt(2.0 * spec.es);
    double lo = 0.0;
    int guard = 0;
    while (p.lambda(hi) > 0.0) {
      lo = hi;
      hi *= 1.5;
      if (++guard > 60)
        throw std::range_error("v0: no sign change of Lambda (extend v_max)");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (p.lambda(mid) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    p.v0 = 0.5 * (lo + hi);
  }

  // Variational route: golden-section refinement around the grid minimizer.
  // When the infimum sits at the eta->0- edge (the vc > v0 regime) the
  // boundary value (0-es)/L(0-) is the candidate; flag it.
  {
    const auto ratio = [&](double eta) { return (eta - spec.es) / p.L_at(eta); };
    std::size_t best = 0;
    double best_val = ratio(p.eta_grid[0]);
    for (std::size_t j = 1; j < p.eta_grid.size(); ++j) {
      const double r = ratio(p.eta_grid[j]);
      if (r < best_val) {
        best_val = r;
        best = j;
      }
    }
    double a = p.eta_grid[best == 0 ? 0 : best - 1];
    double b = p.eta_grid[std::min(best + 1, p.eta_grid.size() - 1)];
    const double gr = 0.61803398874989484820;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    for (int it = 0; it < 120; ++it) {
      if (ratio(c) < ratio(d))
        b = d;
      else
        a = c;
      c = b - gr * (b - a);
      d = a + gr * (b - a);
    }
    p.v0_variational = ratio(0.5 * (a + b));
    if (best + 1 >= p.eta_grid.size()) {
      const double boundary = (0.0 - spec.es) / p.L0;
      if (boundary < p.v0_variational) {
        p.v0_variational = boundary;
        p.v0_var_at_boundary = true;
      }
    }
  }

  p.vel_ok = p.v0 > p.vc;

  // ---- velocity tables ------------------------------------------------------
  {
    const double vc_grid = 1.0 / p.dL_tab.back();
    const double v_lo = std::max(cfg.v_lo_factor * p.v0, 1.02 * vc_grid);
    const double v_hi = cfg.v_hi_factor * p.v0;
    if (v_hi > v_lo) {
      for (long k = 0; k < cfg.v_points; ++k) {
        const double v = v_lo + (v_hi - v_lo) * static_cast<double>(k) /
                                    static_cast<double>(cfg.v_points - 1);
        p.v_grid.push_back(v);
        const double eb = p.eta_bar(v);
        p.eta_bar_tab.push_back(eb);
        p.legendre_tab.push_back(eb / v - p.L_at(eb));
        p.lambda_tab.push_back(spec.es - v * (eb / v - p.L_at(eb)));
      }
    }
  }

  // ---- variance constants at v0 --------------------------------------------
  if (p.vel_ok) {
    p.eta_bar_v0 = p.eta_bar(p.v0);
    const long lag2 = 2 * cfg.lag_cutoff;
    std::vector<double> per_env(static_cast<std::size_t>(cfg.sigma_env));
    std::vector<double> per_env_doubled(static_cast<std::size_t>(cfg.sigma_env));
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(cfg.sigma_env));
    parallel_for(static_cast<std::size_t>(cfg.sigma_env), cfg.jobs, [&](std::size_t e) {
      PotentialField field(env_replica(spec, "sigma-env", static_cast<long>(e)));
      ZetaGrid grid(field, cfg.n_units, bvp);
      std::vector<double> L(static_cast<std::size_t>(cfg.n_units));
      for (long i = 1; i <= cfg.n_units; ++i)
        L[static_cast<std::size_t>(i - 1)] = grid.log_mgf_unit(i, p.eta_bar_v0);
      rows[e] = std::move(L);
    });
    double mu = 0.0;
    double vmin = rows[0][0], vmax = rows[0][0];
    for (const auto& r : rows)
      for (double v : r) {
        mu += v;
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    mu /= static_cast<double>(cfg.sigma_env * cfg.n_units);
    const bool degenerate_sample = vmin == vmax;
    for (std::size_t e = 0; e < rows.size(); ++e) {
      const auto& r = rows[e];
      const long n = cfg.n_units;
      double var = 0.0;
      for (double v : r) var += (v - mu) * (v - mu);
      var /= static_cast<double>(n);
      auto cov_at = [&](long lag) {
        double c = 0.0;
        for (long i = 0; i + lag < n; ++i)
          c += (r[static_cast<std::size_t>(i)] - mu) *
               (r[static_cast<std::size_t>(i + lag)] - mu);
        return c / static_cast<double>(n - lag);
      };
      double s = var, s_doubled = var;
      for (long lag = 1; lag <= lag2 && lag < n; ++lag) {
        const double c = cov_at(lag);
        if (lag <= cfg.lag_cutoff) s += 2.0 * c;
        s_doubled += 2.0 * c;
      }
      per_env[e] = s;
      per_env_doubled[e] = s_doubled;
    }
    const MeanSe ms = mean_se(per_env);
    p.sigma2_v0 = degenerate_sample ? 0.0 : ms.mean;
    p.sigma2_v0_se = degenerate_sample ? 0.0 : ms.se;
    p.sigma2_v0_doubled_lag = degenerate_sample ? 0.0 : mean_se(per_env_doubled).mean;
    if (p.sigma2_v0 < -3.0 * p.sigma2_v0_se)
      throw std::runtime_error("sigma_v2: negative beyond 3 standard errors");
    const double l_eb = p.L_at(p.eta_bar_v0);
    if (std::abs(l_eb) < 1e-6)
      throw std::runtime_error("sigma_tilde2: degenerate L(eta_bar(v0))");
    p.sigma_tilde2 = std::max(0.0, p.sigma2_v0) * p.v0 / (l_eb * l_eb);
  }

  return p;
}

TiltSolution empirical_tilt(const PotentialField& field, double x, double v,
                            const BvpConfig& bvp) {
  if (!(x >= 1.0)) throw std::invalid_argument("empirical_tilt: x must be >= 1");
  if (!(v > 0.0)) throw std::invalid_argument("empirical_tilt: v must be positive");
  const long n = static_cast<long>(std::llround(std::floor(x)));
  ZetaGrid grid(field, n, bvp);
  const ZetaGrid::Tilt t = grid.empirical_tilt(n, v);
  TiltSolution out;
  out.x = static_cast<double>(n);
  out.v = v;
  out.eta_x = t.eta_x;
  out.found = t.found;
  return out;
}

MeanSe sigma_v2(const LyapunovProfile& profile, double v, long n_units,
                long lag_cutoff, long n_env, unsigned jobs) {
  const double eb = profile.eta_bar(v);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n_env));
  parallel_for(static_cast<std::size_t>(n_env), jobs, [&](std::size_t e) {
    PotentialField field(env_replica(profile.spec, "sigma-env", static_cast<long>(e)));
    ZetaGrid grid(field, n_units, profile.bvp);
    std::vector<double> L(static_cast<std::size_t>(n_units));
    for (long i = 1; i <= n_units; ++i)
      L[static_cast<std::size_t>(i - 1)] = grid.log_mgf_unit(i, eb);
    rows[e] = std::move(L);
  });
  double mu = 0.0;
  double vmin = rows[0][0], vmax = rows[0][0];
  for (const auto& r : rows)
    for (double val : r) {
      mu += val;
      vmin = std::min(vmin, val);
      vmax = std::max(vmax, val);
    }
  mu /= static_cast<double>(n_env * n_units);
  if (vmin == vmax) return MeanSe{0.0, 0.0, static_cast<std::size_t>(n_env)};
  std::vector<double> per_env(rows.size());
  for (std::size_t e = 0; e < rows.size(); ++e) {
    const auto& r = rows[e];
    double var = 0.0;
    for (double val : r) var += (val - mu) * (val - mu);
    var /= static_cast<double>(n_units);
    double s = var;
    for (long lag = 1; lag <= lag_cutoff && lag < n_units; ++lag) {
      double c = 0.0;
      for (long i = 0; i + lag < n_units; ++i)
        c += (r[static_cast<std::size_t>(i)] - mu) *
             (r[static_cast<std::size_t>(i + lag)] - mu);
      s += 2.0 * c / static_cast<double>(n_units - lag);
    }
    per_env[e] = s;
  }
  const MeanSe ms = mean_se(per_env);
  if (ms.mean < -3.0 * ms.se)
    throw std::runtime_error("sigma_v2: negative beyond 3 standard errors");
  return ms;
}

LegendreProcessValue empirical_legendre_process(const LyapunovProfile& profile,
                                                const PotentialField& field,
                                                double v, double x) {
  if (!(x >= 1.0))
    throw std::invalid_argument("empirical_legendre_process: x must be >= 1");
  const long n = static_cast<long>(std::llround(std::floor(x)));
  ZetaGrid grid(field, n, profile.bvp);
  const ZetaGrid::Tilt tilt = grid.empirical_tilt(n, v);
  LegendreProcessValue out;
  out.tilt_found = tilt.found;
  out.eta_x = tilt.eta_x;
  if (!tilt.found) return out;
  const double emp_star =
      tilt.eta_x / v - grid.avg_log_mgf(n, tilt.eta_x);
  out.w = std::sqrt(static_cast<double>(n)) * (emp_star - profile.legendre_star(v));
  return out;
}

std::string LyapunovProfile::text_report() const {
  std::ostringstream os;
  os << "# lyapunov profile\n";
  os << "kind = " << to_string(spec.kind) << "\n";
  os << "ei = " << format_double(spec.ei) << "\n";
  os << "es = " << format_double(spec.es) << "\n";
  if (spec.kind == PotentialKind::matern_bump) {
    os << "a = " << format_double(spec.bump_amplitude) << "\n";
    os << "epsilon = " << format_double(spec.mollifier_width) << "\n";
  }
  os << "seed = " << spec.seed << "\n";
  os << "n_env = " << cfg.n_env << "\n";
  os << "n_units = " << cfg.n_units << "\n";
  os << "eta_points = " << eta_grid.size() << "\n";
  os << "L0 = " << format_double(L0) << "\n";
  os << "vc = " << format_double(vc) << "\n";
  os << "v0 = " << format_double(v0) << "\n";
  os << "v0_variational = " << format_double(v0_variational) << "\n";
  os << "vel_ok = " << (vel_ok ? "true" : "false") << "\n";
  os << "eta_bar_v0 = " << format_double(eta_bar_v0) << "\n";
  os << "sigma2_v0 = " << format_double(sigma2_v0) << "\n";
  os << "sigma2_v0_se = " << format_double(sigma2_v0_se) << "\n";
  os << "sigma2_v0_doubled_lag = " << format_double(sigma2_v0_doubled_lag) << "\n";
  os << "sigma_tilde2 = " << format_double(sigma_tilde2) << "\n";
  return os.str();
}

}  // namespace randfront
