#include "randfront/kpp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "window_internal.hpp"

namespace randfront {

// ---------------------------------------------------------------------------
// Offspring laws
// ---------------------------------------------------------------------------

double OffspringLaw::mean() const {
  double m = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k) m += static_cast<double>(k) * p[k];
  return m;
}

double OffspringLaw::second_moment() const {
  double m = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k)
    m += static_cast<double>(k) * static_cast<double>(k) * p[k];
  return m;
}

void OffspringLaw::validate() const {
  if (p.size() < 2 || p[0] != 0.0)
    throw std::invalid_argument("offspring law: p_0 must be zero");
  double total = 0.0;
  for (double v : p) {
    if (v < 0.0 || v > 1.0) throw std::invalid_argument("offspring law: p_k outside [0,1]");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("offspring law: probabilities must sum to 1");
  if (std::abs(mean() - 2.0) > 1e-12)
    throw std::invalid_argument("offspring law: mean must equal 2 exactly");
}

OffspringLaw OffspringLaw::binary() {
  OffspringLaw law;
  law.p = {0.0, 0.0, 1.0};
  return law;
}

OffspringLaw OffspringLaw::one_three() {
  OffspringLaw law;
  law.p = {0.0, 0.5, 0.0, 0.5};
  return law;
}

OffspringLaw OffspringLaw::gm(int n) {
  if (n < 1) throw std::invalid_argument("offspring law: gm index must be >= 1");
  OffspringLaw law;
  law.p.assign(static_cast<std::size_t>(n) + 2, 0.0);
  law.p[1] = 1.0 - 1.0 / static_cast<double>(n);
  law.p[static_cast<std::size_t>(n) + 1] = 1.0 / static_cast<double>(n);
  return law;
}

OffspringLaw OffspringLaw::from_string(const std::string& text) {
  if (text == "binary") return binary();
  if (text == "one_three") return one_three();
  if (text.rfind("gm:", 0) == 0) return gm(std::stoi(text.substr(3)));
  if (text.rfind("table:", 0) == 0) {
    OffspringLaw law;
    law.p = {0.0};
    std::stringstream ss(text.substr(6));
    std::string tok;
    while (std::getline(ss, tok, ',')) law.p.push_back(std::stod(tok));
    law.validate();
    return law;
  }
  throw std::invalid_argument("unknown offspring law: " + text);
}

std::string OffspringLaw::to_string() const {
  std::ostringstream os;
  os << "table:";
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (k > 1) os << ',';
    os << p[k];
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

namespace {

double gm_value(int n, double x) {
  const double q = 1.0 - x;
  return q / static_cast<double>(n) * (1.0 - std::pow(q, n));
}

double gm_derivative(int n, double x) {
  // d/dx [(1-x)/n - (1-x)^{n+1}/n]
  const double q = 1.0 - x;
  return -1.0 / static_cast<double>(n) +
         (static_cast<double>(n) + 1.0) / static_cast<double>(n) * std::pow(q, n);
}

// F(u) = 1 - u - sum p_k (1-u)^k evaluated through the power recurrence.
double offspring_value(const OffspringLaw& law, double u) {
  const double q = 1.0 - u;
  double qk = 1.0;
  double acc = 1.0 - u;
  for (std::size_t k = 1; k < law.p.size(); ++k) {
    qk *= q;
    acc -= law.p[k] * qk;
  }
  return acc;
}

double offspring_derivative(const OffspringLaw& law, double u) {
  const double q = 1.0 - u;
  double qk = 1.0;  // q^{k-1}
  double acc = -1.0;
  for (std::size_t k = 1; k < law.p.size(); ++k) {
    acc += law.p[k] * static_cast<double>(k) * qk;
    qk *= q;
  }
  return acc;
}

double table_interp(const std::vector<double>& xs, const std::vector<double>& ys,
                    double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] * (1.0 - w) + ys[i + 1] * w;
}

}  // namespace

double Nonlinearity::operator()(double w) const {
  switch (kind_) {
    case Kind::logistic: return w * (1.0 - w);
    case Kind::gm_family: return gm_value(gm_n_, w);
    case Kind::offspring_generated: return offspring_value(law_, w);
    case Kind::custom_table: return table_interp(tw_, tf_, w);
  }
  return 0.0;
}

double Nonlinearity::derivative(double w) const {
  switch (kind_) {
    case Kind::logistic: return 1.0 - 2.0 * w;
    case Kind::gm_family: return gm_derivative(gm_n_, w);
    case Kind::offspring_generated: return offspring_derivative(law_, w);
    case Kind::custom_table: return table_interp(tw_, tdf_, w);
  }
  return 0.0;
}

std::string Nonlinearity::name() const {
  switch (kind_) {
    case Kind::logistic: return "logistic";
    case Kind::gm_family: return "gm:" + std::to_string(gm_n_);
    case Kind::offspring_generated: return "offspring(" + law_.to_string() + ")";
    case Kind::custom_table: return "table";
  }
  return "?";
}

Nonlinearity Nonlinearity::logistic() { return {}; }

Nonlinearity Nonlinearity::gm(int n) {
  if (n < 1) throw std::invalid_argument("gm_family: index must be >= 1");
  Nonlinearity f;
  f.kind_ = Kind::gm_family;
  f.gm_n_ = n;
  f.law_ = OffspringLaw::gm(n);
  return f;
}

Nonlinearity Nonlinearity::from_offspring(const OffspringLaw& law) {
  law.validate();
  Nonlinearity f;
  f.kind_ = Kind::offspring_generated;
  f.law_ = law;
  return f;
}

Nonlinearity Nonlinearity::from_table(std::vector<double> w, std::vector<double> f,
                                      std::vector<double> df) {
  if (w.size() != f.size() || w.size() != df.size() || w.size() < 2)
    throw std::invalid_argument("nonlinearity table: ragged or too short");
  Nonlinearity out;
  out.kind_ = Kind::custom_table;
  out.tw_ = std::move(w);
  out.tf_ = std::move(f);
  out.tdf_ = std::move(df);
  return out;
}

Nonlinearity gm_family(int n) { return Nonlinearity::gm(n); }

Nonlinearity offspring_to_F(const OffspringLaw& law) {
  return Nonlinearity::from_offspring(law);
}

bool ScReport::all_pass() const {
  for (const auto& c : clauses)
    if (!c.pass) return false;
  return true;
}

std::string ScReport::summary() const {
  std::ostringstream os;
  for (const auto& c : clauses)
    os << (c.pass ? "[ok]   " : "[FAIL] ") << c.name << " (witness " << c.witness
       << ")\n";
  return os.str();
}

ScReport check_sc(const Nonlinearity& f) {
  ScReport rep;
  auto clause = [&](const std::string& name, bool pass, double witness) {
    rep.clauses.push_back({name, pass, witness});
  };

  clause("F(0) = 0", std::abs(f(0.0)) < 1e-10, f(0.0));
  clause("F(1) = 0", std::abs(f(1.0)) < 1e-10, f(1.0));

  double min_interior = 1e300;
  double max_ratio = -1e300;
  for (int k = 1; k < 1000; ++k) {
    const double w = 1e-3 * static_cast<double>(k);
    min_interior = std::min(min_interior, f(w));
    max_ratio = std::max(max_ratio, f(w) / w);
  }
  clause("F > 0 on (0,1)", min_interior > 0.0, min_interior);
  clause("F'(0) = 1", std::abs(f.derivative(0.0) - 1.0) < 1e-8, f.derivative(0.0));
  clause("sup F(w)/w = 1", max_ratio <= 1.0 + 1e-9 && max_ratio > 0.9, max_ratio);
  clause("F'(1) < 0", f.derivative(1.0) < 0.0, f.derivative(1.0));

  // limsup (1 - F'(w))/w < inf: a log-log slope fit on [1e-4, 1e-2]; slope
  // below ~0.8 signals a w^p singularity with p < 1 and an unbounded ratio.
  {
    std::vector<double> lw, lv;
    double worst_ratio = 0.0;
    bool tiny = true;
    for (int k = 0; k <= 20; ++k) {
      const double w = 1e-4 * std::pow(100.0, static_cast<double>(k) / 20.0);
      const double g = 1.0 - f.derivative(w);
      worst_ratio = std::max(worst_ratio, g / w);
      if (std::abs(g) > 1e-12) tiny = false;
      if (g > 0.0) {
        lw.push_back(std::log(w));
        lv.push_back(std::log(g));
      }
    }
    bool pass = tiny;
    if (!pass && lw.size() >= 5) {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double n = static_cast<double>(lw.size());
      for (std::size_t i = 0; i < lw.size(); ++i) {
        sx += lw[i];
        sy += lv[i];
        sxx += lw[i] * lw[i];
        sxy += lw[i] * lv[i];
      }
      const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
      pass = slope >= 0.8;
    }
    clause("limsup (1-F'(w))/w finite", pass, worst_ratio);
  }
  return rep;
}

int dominating_gm(const Nonlinearity& f) {
  if (!check_sc(f).all_pass())
    throw std::invalid_argument("dominating_gm: F fails the standard conditions");
  const double tol = 1e-12;
  auto dominated = [&](int m) {
    for (int k = 0; k <= 10000; ++k) {
      const double x = 1e-4 * static_cast<double>(k);
      if (gm_value(m, x) > f(x) + tol) return false;
    }
    return true;
  };
  // G_{n+1} <= G_n pointwise, so the admissible set is upward closed.
  if (dominated(1)) return 1;
  int lo = 1, hi = 2;
  while (!dominated(hi)) {
    lo = hi;
    hi *= 2;
    if (hi > 1000000) {
      // report the largest violation at the cap
      double worst = 0.0, where = 0.0;
      for (int k = 0; k <= 10000; ++k) {
        const double x = 1e-4 * static_cast<double>(k);
        const double gap = gm_value(1000000, x) - f(x);
        if (gap > worst) {
          worst = gap;
          where = x;
        }
      }
      throw std::runtime_error(
          "dominating_gm: no dominated member up to 1e6 (max violation " +
          std::to_string(worst) + " at w=" + std::to_string(where) + ")");
    }
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (dominated(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// F-KPP stepper
// ---------------------------------------------------------------------------

SolutionTrajectory solve_kpp(const PotentialField& field, const Nonlinearity& f,
                             const InitialCondition& w0, const GridConfig& grid,
                             double horizon) {
  grid.validate();
  w0.validate();
  if (!(horizon > 0.0)) throw std::invalid_argument("solve_kpp: horizon must be positive");
  if (!(grid.track_level > 0.0 && grid.track_level < 1.0))
    throw std::invalid_argument("solve_kpp: tracking level must lie in (0,1)");
  if (!check_sc(f).all_pass())
    throw std::invalid_argument("solve_kpp: F fails the standard conditions:\n" +
                                check_sc(f).summary());
  if (w0.kind == InitialKind::scaled_heaviside)
    throw std::invalid_argument("solve_kpp: initial data must stay within [0,1]");

  detail::MovingWindow win(field, grid);
  win.fill_initial(w0);

  SolutionTrajectory traj;
  traj.log_form = false;
  traj.dx = win.dx();
  traj.dt = grid.dt;
  traj.horizon = horizon;
  traj.track_level = grid.track_level;

  const long steps = static_cast<long>(std::llround(horizon / grid.dt));
  const long snap_every =
      std::max(1L, static_cast<long>(std::llround(grid.snapshot_dt / grid.dt)));

  const bool exact_logistic = f.exact_logistic();
  std::vector<double> react_factor;  // e^{xi dt} for the exact logistic update
  auto refresh_react = [&] {
    if (!exact_logistic) return;
    react_factor.resize(win.xi().size());
    for (std::size_t j = 0; j < react_factor.size(); ++j)
      react_factor[j] = std::exp(grid.dt * win.xi()[j]);
  };
  refresh_react();

  auto snapshot = [&](double t) {
    Snapshot s;
    s.t = t;
    s.x_left = win.x_left();
    s.log_offset = 0.0;
    s.values = win.values();
    traj.snapshots.push_back(std::move(s));
  };
  snapshot(0.0);

  for (long s = 1; s <= steps; ++s) {
    win.cn_diffuse(0.5 * grid.dt);
    {
      auto& u = win.values();
      double clamp_mag = 0.0;
      if (exact_logistic) {
        for (std::size_t j = 0; j < u.size(); ++j) {
          const double e = react_factor[j];
          u[j] = u[j] * e / (1.0 + u[j] * (e - 1.0));
        }
      } else {
        // RK4 on w' = xi F(w), four substeps of dt/4
        const double h = grid.dt / 4.0;
        for (std::size_t j = 0; j < u.size(); ++j) {
          double w = u[j];
          const double rate = win.xi()[j];
          for (int sub = 0; sub < 4; ++sub) {
            const double k1 = rate * f(w);
            const double k2 = rate * f(w + 0.5 * h * k1);
            const double k3 = rate * f(w + 0.5 * h * k2);
            const double k4 = rate * f(w + h * k3);
            w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
          }
          u[j] = w;
        }
      }
      for (auto& w : u) {
        if (w < 0.0) {
          clamp_mag = std::max(clamp_mag, -w);
          w = 0.0;
        } else if (w > 1.0) {
          clamp_mag = std::max(clamp_mag, w - 1.0);
          w = 1.0;
        }
      }
      if (clamp_mag > 1e-6)
        throw std::runtime_error("solve_kpp: reaction clamp of " +
                                 std::to_string(clamp_mag) +
                                 " exceeds 1e-6; reduce dt");
    }
    win.cn_diffuse(0.5 * grid.dt);
    {
      // diffusion overshoot stays at rounding scale; keep the bounds exact
      auto& u = win.values();
      for (auto& w : u) w = std::clamp(w, 0.0, 1.0);
    }

    const double t = grid.dt * static_cast<double>(s);
    const double front =
        detail::plain_front(win.values(), win.x_left(), win.dx(), grid.track_level);
    traj.step_times.push_back(t);
    traj.step_fronts.push_back(front);
    if (std::isfinite(front)) {
      win.check_breach(front, t);
      if (win.shift_for_front(front) > 0) refresh_react();
    }
    if (s % snap_every == 0 || s == steps) snapshot(t);
  }
  return traj;
}

double front_kpp(const SolutionTrajectory& traj, double eps, double t) {
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("front_kpp: level must lie in (0,1)");
  const std::size_t i = traj.snapshot_index(t);
  const Snapshot& s = traj.snapshots[i];
  const double fr = detail::plain_front(s.values, s.x_left, traj.dx, eps);
  const double right = s.x_left + traj.dx * static_cast<double>(s.values.size() - 1);
  if (std::isfinite(fr) && fr >= right - 3.0 * traj.dx - 1e-9)
    throw std::runtime_error(
        "front_kpp: level set reaches the right window edge; enlarge window_right");
  return fr;
}

FrontTrace kpp_front_trace(const SolutionTrajectory& traj, double eps) {
  FrontTrace out;
  out.threshold = eps;
  for (const auto& s : traj.snapshots) {
    out.times.push_back(s.t);
    out.positions.push_back(detail::plain_front(s.values, s.x_left, traj.dx, eps));
  }
  return out;
}

}  // namespace randfront
