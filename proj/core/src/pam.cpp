#include "randfront/pam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "randfront/parallel.hpp"
#include "randfront/rng.hpp"
#include "window_internal.hpp"

namespace randfront {

void GridConfig::validate() const {
  if (!(dx > 0.0 && dt > 0.0)) throw std::invalid_argument("grid: steps must be positive");
  if (!(window_left > 5.0 && window_right > 10.0))
    throw std::invalid_argument("grid: window margins too small");
  if (!(snapshot_dt >= dt)) throw std::invalid_argument("grid: snapshot_dt below dt");
  if (!(track_level > 0.0))
    throw std::invalid_argument("grid: track_level must be positive");
}

double InitialCondition::value_at(double x) const {
  switch (kind) {
    case InitialKind::heaviside: return x <= 0.0 ? 1.0 : 0.0;
    case InitialKind::box: return (x >= -delta_prime && x <= 0.0) ? delta_prime : 0.0;
    case InitialKind::scaled_heaviside: return x <= 0.0 ? c_prime : 0.0;
  }
  return 0.0;
}

void InitialCondition::validate() const {
  if (!(delta_prime > 0.0 && delta_prime < 1.0))
    throw std::invalid_argument("initial condition: delta' must lie in (0,1)");
  if (!(c_prime > 1.0))
    throw std::invalid_argument("initial condition: C' must exceed 1");
}

double InitialCondition::cell_average(double x, double dx) const {
  const double lo = x - 0.5 * dx, hi = x + 0.5 * dx;
  // Cells fully inside a constant region return the constant exactly; only
  // cells straddling a jump carry a fractional average.
  auto step_average = [&](double level) {
    if (hi <= 0.0) return level;
    if (lo >= 0.0) return 0.0;
    return level * std::clamp(-lo / dx, 0.0, 1.0);
  };
  switch (kind) {
    case InitialKind::heaviside: return step_average(1.0);
    case InitialKind::scaled_heaviside: return step_average(c_prime);
    case InitialKind::box: {
      if (hi <= -delta_prime || lo >= 0.0) return 0.0;
      if (lo >= -delta_prime && hi <= 0.0) return delta_prime;
      const double cover =
          std::clamp((std::min(hi, 0.0) - std::max(lo, -delta_prime)) / dx, 0.0, 1.0);
      return delta_prime * cover;
    }
  }
  return 0.0;
}

InitialCondition InitialCondition::heaviside() { return {}; }
InitialCondition InitialCondition::box(double dp) {
  InitialCondition ic;
  ic.kind = InitialKind::box;
  ic.delta_prime = dp;
  ic.validate();
  return ic;
}
InitialCondition InitialCondition::scaled_heaviside(double cp) {
  InitialCondition ic;
  ic.kind = InitialKind::scaled_heaviside;
  ic.c_prime = cp;
  ic.validate();
  return ic;
}

std::size_t SolutionTrajectory::snapshot_index(double t) const {
  if (snapshots.empty()) throw std::runtime_error("trajectory holds no snapshots");
  std::size_t best = 0;
  double dist = 1e300;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const double d = std::abs(snapshots[i].t - t);
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  if (dist > 0.51 * (snapshots.size() > 1
                         ? snapshots[1].t - snapshots[0].t
                         : dt))
    throw std::invalid_argument("no snapshot near t=" + std::to_string(t));
  return best;
}

bool SolutionTrajectory::x_in_window(std::size_t snap, double x) const {
  const Snapshot& s = snapshots.at(snap);
  const double right =
      s.x_left + dx * static_cast<double>(s.values.size() - 1);
  return x >= s.x_left && x <= right;
}

double SolutionTrajectory::ln_value(std::size_t snap, double x) const {
  const Snapshot& s = snapshots.at(snap);
  if (!x_in_window(snap, x))
    throw std::invalid_argument("x outside the stored window");
  const double pos = (x - s.x_left) / dx;
  const std::size_t j =
      std::min(static_cast<std::size_t>(pos), s.values.size() - 2);
  const double frac = pos - static_cast<double>(j);
  const double a = s.values[j], b = s.values[j + 1];
  if (a <= 0.0 && b <= 0.0) return -std::numeric_limits<double>::infinity();
  const double la = a > 0.0 ? std::log(a) : -1e300;
  const double lb = b > 0.0 ? std::log(b) : -1e300;
  return s.log_offset + la * (1.0 - frac) + lb * frac;
}

double SolutionTrajectory::plain_value(std::size_t snap, double x) const {
  const Snapshot& s = snapshots.at(snap);
  if (!x_in_window(snap, x))
    throw std::invalid_argument("x outside the stored window");
  const double pos = (x - s.x_left) / dx;
  const std::size_t j =
      std::min(static_cast<std::size_t>(pos), s.values.size() - 2);
  const double frac = pos - static_cast<double>(j);
  return s.values[j] * (1.0 - frac) + s.values[j + 1] * frac;
}

SolutionTrajectory solve_pam(const PotentialField& field, const InitialCondition& ic,
                             const GridConfig& grid, double horizon) {
  grid.validate();
  ic.validate();
  if (!(horizon > 0.0)) throw std::invalid_argument("solve_pam: horizon must be positive");

  detail::MovingWindow win(field, grid);
  win.fill_initial(ic);

  SolutionTrajectory traj;
  traj.log_form = true;
  traj.dx = win.dx();
  traj.dt = grid.dt;
  traj.horizon = horizon;
  traj.track_level = grid.track_level;

  double log_offset = 0.0;
  // normalize the initial data
  {
    auto& u = win.values();
    const double m = *std::max_element(u.begin(), u.end());
    if (!(m > 0.0)) throw std::invalid_argument("initial condition vanishes on the window");
    for (auto& v : u) v /= m;
    log_offset = std::log(m);
  }

  const long steps = static_cast<long>(std::llround(horizon / grid.dt));
  const long snap_every =
      std::max(1L, static_cast<long>(std::llround(grid.snapshot_dt / grid.dt)));

  std::vector<double> half_react(win.xi().size());
  auto refresh_react = [&] {
    for (std::size_t j = 0; j < half_react.size(); ++j)
      half_react[j] = std::exp(0.5 * grid.dt * win.xi()[j]);
  };
  refresh_react();

  auto snapshot = [&](double t) {
    Snapshot s;
    s.t = t;
    s.x_left = win.x_left();
    s.log_offset = log_offset;
    s.values = win.values();
    traj.snapshots.push_back(std::move(s));
  };
  snapshot(0.0);

  traj.step_times.reserve(static_cast<std::size_t>(steps));
  traj.step_fronts.reserve(static_cast<std::size_t>(steps));

  for (long s = 1; s <= steps; ++s) {
    auto& u = win.values();
    for (std::size_t j = 0; j < u.size(); ++j) u[j] *= half_react[j];
    win.cn_diffuse(grid.dt);
    {
      auto& u2 = win.values();
      for (std::size_t j = 0; j < u2.size(); ++j) u2[j] *= half_react[j];
    }
    // renormalize: window max folded into the log offset
    {
      auto& u2 = win.values();
      const double m = *std::max_element(u2.begin(), u2.end());
      for (auto& v : u2) v /= m;
      log_offset += std::log(m);
    }
    const double t = grid.dt * static_cast<double>(s);
    const double front = detail::log_front(win.values(), win.x_left(), win.dx(),
                                           log_offset, grid.track_level);
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

double front_pam(const SolutionTrajectory& traj, double a, double t) {
  if (!(a > 0.0)) throw std::invalid_argument("front_pam: threshold must be positive");
  const std::size_t i = traj.snapshot_index(t);
  const Snapshot& s = traj.snapshots[i];
  const double fr = detail::log_front(s.values, s.x_left, traj.dx, s.log_offset, a);
  const double right = s.x_left + traj.dx * static_cast<double>(s.values.size() - 1);
  if (std::isfinite(fr) && fr >= right - 3.0 * traj.dx - 1e-9)
    throw std::runtime_error(
        "front_pam: level set reaches the right window edge; enlarge window_right");
  return fr;
}

double breakpoint_inverse(const SolutionTrajectory& traj, double x, double a) {
  if (!(a > 0.0))
    throw std::invalid_argument("breakpoint_inverse: threshold must be positive");
  const double la = std::log(a);
  double prev_t = 0.0;
  double prev_val = 0.0;
  bool have_prev = false;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    if (!traj.x_in_window(i, x)) continue;
    const double lv = traj.ln_value(i, x);
    const double t = traj.snapshots[i].t;
    if (lv >= la) {
      if (!have_prev) return t;  // already above at the first visible snapshot
      const double w = (la - prev_val) / (lv - prev_val);
      return prev_t + (t - prev_t) * std::clamp(w, 0.0, 1.0);
    }
    prev_t = t;
    prev_val = lv;
    have_prev = true;
  }
  return kNeverReached;
}

FrontTrace pam_front_trace(const SolutionTrajectory& traj, double a, double x_lo,
                           double x_hi) {
  FrontTrace out;
  out.threshold = a;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const Snapshot& s = traj.snapshots[i];
    out.times.push_back(s.t);
    out.positions.push_back(
        detail::log_front(s.values, s.x_left, traj.dx, s.log_offset, a));
  }
  for (double x = std::ceil(x_lo); x <= x_hi; x += 1.0)
    out.breakpoints.push_back({x, breakpoint_inverse(traj, x, a)});
  return out;
}

MeanSe fk_mc_pam(const PotentialField& field, double t, double x,
                 const InitialCondition& ic, std::size_t n_paths, double dt_path,
                 std::uint64_t seed, unsigned jobs) {
  ic.validate();
  if (!(t > 0.0 && dt_path > 0.0))
    throw std::invalid_argument("fk_mc_pam: t and dt_path must be positive");
  if (n_paths < 2) throw std::invalid_argument("fk_mc_pam: need at least two paths");

  const long steps = std::max(1L, static_cast<long>(std::llround(t / dt_path)));
  const double dt = t / static_cast<double>(steps);
  const double half_dt = 0.5 * dt;
  const double sqrt_dt = std::sqrt(dt);

  const unsigned blocks = 64;
  struct Partial {
    double sum = 0.0;
    double sumsq = 0.0;
  };
  std::vector<Partial> partial(blocks);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    const std::size_t lo = n_paths * b / blocks;
    const std::size_t hi = n_paths * (b + 1) / blocks;
    Partial acc;
    for (std::size_t p = lo; p < hi; ++p) {
      CounterRng rng(derive_seed(seed, "fk-path", p), 0);
      double pos = x;
      double xi_prev = field.evaluate(pos);
      double integral = 0.0;
      for (long s = 0; s < steps; ++s) {
        pos += sqrt_dt * rng.normal();
        const double xi_cur = field.evaluate(pos);
        integral += half_dt * (xi_prev + xi_cur);
        xi_prev = xi_cur;
      }
      const double w = std::exp(integral) * ic.value_at(pos);
      acc.sum += w;
      acc.sumsq += w * w;
    }
    partial[b] = acc;
  });
  double sum = 0.0, sumsq = 0.0;
  for (const auto& pt : partial) {
    sum += pt.sum;
    sumsq += pt.sumsq;
  }
  const double n = static_cast<double>(n_paths);
  MeanSe out;
  out.n = n_paths;
  out.mean = sum / n;
  const double var = std::max(0.0, (sumsq - n * out.mean * out.mean) / (n - 1.0));
  out.se = std::sqrt(var / n);
  return out;
}

}  // namespace randfront
