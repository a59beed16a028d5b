#include "randfront/hitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace randfront {

namespace {

void check_eta_domain(double eta) {
  if (!(eta < 0.0)) throw std::domain_error("tilting defined for eta<0 only");
  if (eta < kEtaMin || eta > kEtaMax)
    throw std::domain_error("eta outside the clamped domain [-20, -1e-3]");
}

// Numerov scheme for phi'' = f(y) phi with f = -2(zeta+eta) > 0:
//   (1 - w f_{j+1}) phi_{j+1} - (2 + 10 w f_j) phi_j + (1 - w f_{j-1}) phi_{j-1} = 0,
// w = dx^2/12, phi_0 = 1, and a WKB Robin closure phi' = -sqrt(f) phi at the
// far node eliminated through a ghost point. Returns phi at `out_node`.
// zeta must span nodes 0..N+1 where N = zeta.size()-2.
double numerov_phi_at(std::span<const double> zeta, double eta, double dx,
                      long out_node) {
  const long n = static_cast<long>(zeta.size()) - 2;
  if (n < 2 || out_node < 0 || out_node > n)
    throw std::invalid_argument("numerov: bad node range");
  const double w = dx * dx / 12.0;
  auto f = [&](long j) { return -2.0 * (zeta[static_cast<std::size_t>(j)] + eta); };

  thread_local std::vector<double> cp, dp;
  cp.assign(static_cast<std::size_t>(n) + 1, 0.0);
  dp.assign(static_cast<std::size_t>(n) + 1, 0.0);

  // Thomas forward sweep, row 0 is the Dirichlet row phi_0 = 1.
  cp[0] = 0.0;
  dp[0] = 1.0;
  for (long j = 1; j < n; ++j) {
    const double aj = 1.0 - w * f(j - 1);
    const double bj = -(2.0 + 10.0 * w * f(j));
    const double cj = 1.0 - w * f(j + 1);
    const double m = bj - aj * cp[static_cast<std::size_t>(j - 1)];
    cp[static_cast<std::size_t>(j)] = cj / m;
    dp[static_cast<std::size_t>(j)] = -aj * dp[static_cast<std::size_t>(j - 1)] / m;
  }
  {
    const double fn = f(n);
    if (!(fn > 0.0))
      throw std::domain_error("far-field rate requires zeta+eta < 0 at the boundary");
    const double k = std::sqrt(fn);
    const double an = (1.0 - w * f(n - 1)) + (1.0 - w * f(n + 1));
    const double bn = -(2.0 + 10.0 * w * fn) - (1.0 - w * f(n + 1)) * 2.0 * dx * k;
    const double m = bn - an * cp[static_cast<std::size_t>(n - 1)];
    dp[static_cast<std::size_t>(n)] = -an * dp[static_cast<std::size_t>(n - 1)] / m;
  }
  // Back substitution only down to out_node.
  double phi_next = dp[static_cast<std::size_t>(n)];
  if (out_node == n) return phi_next;
  for (long j = n - 1; j >= out_node; --j) {
    phi_next = dp[static_cast<std::size_t>(j)] -
               cp[static_cast<std::size_t>(j)] * phi_next;
  }
  return phi_next;
}

double unit_from_grid(std::span<const double> zeta, double eta, double dx, long per) {
  const double phi = numerov_phi_at(zeta, eta, dx, per);
  if (!(phi > 0.0) || !std::isfinite(phi))
    throw std::runtime_error("crossing solve produced a non-positive value (residual: " +
                             std::to_string(phi) + ")");
  return std::log(phi);
}

double richardson_d1(const std::vector<double>& l, double h) {
  // l = {L(eta-h), L(eta-h/2), L(eta), L(eta+h/2), L(eta+h)}
  const double d_h = (l[4] - l[0]) / (2.0 * h);
  const double d_h2 = (l[3] - l[1]) / h;
  return (4.0 * d_h2 - d_h) / 3.0;
}

double richardson_d2(const std::vector<double>& l, double h) {
  const double s_h = (l[4] - 2.0 * l[2] + l[0]) / (h * h);
  const double s_h2 = (l[3] - 2.0 * l[2] + l[1]) / (0.25 * h * h);
  return (4.0 * s_h2 - s_h) / 3.0;
}

}  // namespace

void BvpConfig::validate() const {
  if (!(dx > 0.0)) throw std::invalid_argument("bvp: dx must be positive");
  if (!(right_margin >= 10.0))
    throw std::invalid_argument("bvp: right_margin must be >= 10");
  if (!(eta_fd_step > 0.0 && eta_fd_step < 1e-2))
    throw std::invalid_argument("bvp: eta_fd_step must lie in (0, 1e-2)");
  if (!(k_win > 0.0)) throw std::invalid_argument("bvp: k_win must be positive");
  if (!(pde_dx > 0.0 && pde_dt > 0.0))
    throw std::invalid_argument("bvp: parabolic steps must be positive");
}

double BvpConfig::effective_dx(const PotentialField& field) const {
  double d = std::min(dx, field.resolution_hint());
  const long per = std::max(1L, std::lround(1.0 / d));
  return 1.0 / static_cast<double>(per);
}

double log_mgf_unit(const PotentialField& field, long i, double eta,
                    const BvpConfig& cfg) {
  cfg.validate();
  check_eta_domain(eta);
  const double dx = cfg.effective_dx(field);
  const long per = std::lround(1.0 / dx);
  const long n = static_cast<long>(std::ceil(cfg.right_margin / dx));
  const auto zeta = field.sample_zeta_grid(static_cast<double>(i - 1), dx,
                                           static_cast<std::size_t>(n) + 2);
  return unit_from_grid(zeta, eta, dx, per);
}

double log_mgf_partial(const PotentialField& field, double x, double eta,
                       const BvpConfig& cfg) {
  cfg.validate();
  check_eta_domain(eta);
  if (x == std::floor(x))
    throw std::invalid_argument("log_mgf_partial: x must be non-integer");
  const double a = std::ceil(x) - 1.0;
  const double dist = x - a;
  const double dx0 = cfg.effective_dx(field);
  const long n1 = std::max(1L, std::lround(dist / dx0));
  const double dx = dist / static_cast<double>(n1);
  const long n = static_cast<long>(std::ceil((dist + cfg.right_margin) / dx));
  const auto zeta = field.sample_zeta_grid(a, dx, static_cast<std::size_t>(n) + 2);
  return unit_from_grid(zeta, eta, dx, n1);
}

double log_mgf_avg(const PotentialField& field, double x, double eta,
                   const BvpConfig& cfg) {
  cfg.validate();
  check_eta_domain(eta);
  if (!(x >= 1.0)) throw std::invalid_argument("log_mgf_avg: x must be >= 1");
  const long whole = static_cast<long>(std::floor(x));
  double sum = 0.0;
  for (long i = 1; i <= whole; ++i) sum += log_mgf_unit(field, i, eta, cfg);
  if (x != std::floor(x)) sum += log_mgf_partial(field, x, eta, cfg);
  return sum / x;
}

double d_log_mgf(const PotentialField& field, long i, double eta, int order,
                 const BvpConfig& cfg) {
  cfg.validate();
  check_eta_domain(eta);
  if (order != 1 && order != 2)
    throw std::invalid_argument("d_log_mgf: order must be 1 or 2");
  // The second difference divides roundoff by h^2, so it runs on the wider
  // sqrt(step) stencil.
  const double rel = order == 1 ? cfg.eta_fd_step : std::sqrt(cfg.eta_fd_step);
  const double h = rel * std::abs(eta);
  if (!(eta + h < 0.0))
    throw std::domain_error("d_log_mgf: finite-difference stencil crosses eta=0");
  const double dx = cfg.effective_dx(field);
  const long per = std::lround(1.0 / dx);
  const long n = static_cast<long>(std::ceil(cfg.right_margin / dx));
  const auto zeta = field.sample_zeta_grid(static_cast<double>(i - 1), dx,
                                           static_cast<std::size_t>(n) + 2);
  std::vector<double> l(5);
  const double offs[5] = {-h, -0.5 * h, 0.0, 0.5 * h, h};
  for (int k = 0; k < 5; ++k) l[static_cast<std::size_t>(k)] =
      unit_from_grid(zeta, eta + offs[k], dx, per);
  const double d = order == 1 ? richardson_d1(l, h) : richardson_d2(l, h);
  if (!(d > 0.0))
    throw std::runtime_error("d_log_mgf: derivative lost positivity (value " +
                             std::to_string(d) + ")");
  return d;
}

// ---------------------------------------------------------------------------
// Time-constrained functionals
// ---------------------------------------------------------------------------

namespace {

// Crank-Nicolson sweep for g_t = (1/2) g_yy + zeta g on [0, L] with g(.,0)=1,
// absorbing right boundary, g(0,y)=0 for y>0. Reaction handled as an exact
// Strang factor. The first steps run backward Euler (Rannacher smoothing of
// the corner discontinuity at (0,0)).
class CrossingSweep {
 public:
  CrossingSweep(const PotentialField& field, double length, const BvpConfig& cfg)
      : dt_(cfg.pde_dt) {
    dx_ = std::min(cfg.pde_dx, field.resolution_hint() * 4.0);
    n_ = static_cast<long>(std::ceil(length / dx_));
    dx_ = length / static_cast<double>(n_);
    zeta_ = field.sample_zeta_grid(0.0, dx_, static_cast<std::size_t>(n_) + 1);
    half_react_.resize(zeta_.size());
    for (std::size_t j = 0; j < zeta_.size(); ++j)
      half_react_[j] = std::exp(0.5 * dt_ * zeta_[j]);
    g_.assign(static_cast<std::size_t>(n_) + 1, 0.0);
    g_[0] = 1.0;
    scratch_.resize(g_.size());
    cp_.resize(g_.size());
    dp_.resize(g_.size());
  }

  double time() const { return t_; }
  double dt() const { return dt_; }

  void step() {
    const bool rannacher = steps_ < 2;
    for (std::size_t j = 0; j < g_.size(); ++j) g_[j] *= half_react_[j];
    diffuse(rannacher);
    for (std::size_t j = 0; j < g_.size(); ++j) g_[j] *= half_react_[j];
    g_[0] = 1.0;
    g_.back() = 0.0;
    ++steps_;
    t_ = dt_ * static_cast<double>(steps_);
  }

  double value_at(double x) const {
    const double pos = x / dx_;
    const long j = std::clamp(static_cast<long>(pos), 0L, n_ - 1);
    const double frac = pos - static_cast<double>(j);
    return g_[static_cast<std::size_t>(j)] * (1.0 - frac) +
           g_[static_cast<std::size_t>(j + 1)] * frac;
  }

 private:
  void diffuse(bool backward_euler) {
    const double r = dt_ / (4.0 * dx_ * dx_);  // CN weight of (1/2) g_yy
    const double ri = backward_euler ? 2.0 * r : r;  // implicit side
    const double re = backward_euler ? 0.0 : r;      // explicit side
    const std::size_t n = g_.size() - 1;
    // rows 1..n-1; boundaries Dirichlet (1 and 0)
    cp_[0] = 0.0;
    dp_[0] = 1.0;
    for (std::size_t j = 1; j < n; ++j) {
      const double rhs = re * g_[j - 1] + (1.0 - 2.0 * re) * g_[j] + re * g_[j + 1];
      const double b = 1.0 + 2.0 * ri;
      const double m = b - (-ri) * cp_[j - 1];
      cp_[j] = -ri / m;
      dp_[j] = (rhs + ri * dp_[j - 1]) / m;
    }
    scratch_[n] = 0.0;
    for (std::size_t j = n; j-- > 0;) scratch_[j] = dp_[j] - cp_[j] * scratch_[j + 1];
    scratch_[0] = 1.0;
    g_.swap(scratch_);
  }

  double dx_ = 0.0;
  double dt_ = 0.0;
  double t_ = 0.0;
  long n_ = 0;
  long steps_ = 0;
  std::vector<double> zeta_, half_react_, g_, scratch_, cp_, dp_;
};

}  // namespace

std::pair<double, double> hitting_time_functional(const PotentialField& field,
                                                  double x, double t,
                                                  const BvpConfig& cfg) {
  cfg.validate();
  if (!(x > 0.0 && t > 0.0))
    throw std::invalid_argument("hitting_time_functional: x and t must be positive");
  if (!(t > cfg.k_win))
    throw std::invalid_argument("hitting_time_functional: horizon t must exceed k_win");
  CrossingSweep sweep(field, x + cfg.right_margin, cfg);
  const double t_early = t - cfg.k_win;
  double g_early = 0.0, prev = 0.0, prev_t = 0.0;
  bool have_early = false;
  while (sweep.time() < t) {
    prev = sweep.value_at(x);
    prev_t = sweep.time();
    sweep.step();
    if (!have_early && sweep.time() >= t_early) {
      const double cur = sweep.value_at(x);
      const double w = (t_early - prev_t) / (sweep.time() - prev_t);
      g_early = prev * (1.0 - w) + cur * w;
      have_early = true;
    }
  }
  // linear interpolation onto t between the last two steps
  const double cur = sweep.value_at(x);
  const double w = sweep.time() > prev_t ? (t - prev_t) / (sweep.time() - prev_t) : 1.0;
  const double g_t = prev * (1.0 - w) + cur * w;
  return {g_t, g_early};
}

std::vector<YDecomposition> y_decomposition_batch(const PotentialField& field,
                                                  std::span<const double> xs,
                                                  double v, const BvpConfig& cfg) {
  cfg.validate();
  if (xs.empty()) return {};
  if (!(v > 0.0)) throw std::invalid_argument("y_decomposition_batch: v must be positive");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] <= xs[i - 1])
      throw std::invalid_argument("y_decomposition_batch: probes must increase");
  if (!(xs.front() / v > cfg.k_win))
    throw std::invalid_argument("y_decomposition_batch: first probe time below k_win");

  CrossingSweep sweep(field, xs.back() + cfg.right_margin, cfg);
  struct Probe {
    double t;
    double x;
    std::size_t slot;
    bool early;
  };
  std::vector<Probe> probes;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    probes.push_back({xs[i] / v - cfg.k_win, xs[i], i, true});
    probes.push_back({xs[i] / v, xs[i], i, false});
  }
  std::sort(probes.begin(), probes.end(),
            [](const Probe& a, const Probe& b) { return a.t < b.t; });

  std::vector<YDecomposition> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i].x = xs[i];

  std::size_t next = 0;
  double prev_t = 0.0;
  std::vector<double> prev_vals(probes.size(), 0.0);
  while (next < probes.size()) {
    for (std::size_t p = next; p < probes.size(); ++p)
      prev_vals[p] = sweep.value_at(probes[p].x);
    prev_t = sweep.time();
    sweep.step();
    while (next < probes.size() && sweep.time() >= probes[next].t) {
      const Probe& pr = probes[next];
      const double cur = sweep.value_at(pr.x);
      const double w =
          sweep.time() > prev_t ? (pr.t - prev_t) / (sweep.time() - prev_t) : 1.0;
      const double val = prev_vals[next] * (1.0 - w) + cur * w;
      if (pr.early)
        out[pr.slot].y_above = val;
      else
        out[pr.slot].y_total = val;
      ++next;
    }
  }
  for (auto& y : out) y.y_window = y.y_total - y.y_above;
  return out;
}

// ---------------------------------------------------------------------------
// ZetaGrid
// ---------------------------------------------------------------------------

ZetaGrid::ZetaGrid(const PotentialField& field, long n_units, const BvpConfig& cfg) {
  cfg.validate();
  if (n_units < 1) throw std::invalid_argument("ZetaGrid: need at least one unit");
  dx_ = cfg.effective_dx(field);
  per_unit_ = std::lround(1.0 / dx_);
  margin_nodes_ = static_cast<long>(std::ceil(cfg.right_margin / dx_));
  n_units_ = n_units;
  fd_step_ = cfg.eta_fd_step;
  const long total = (n_units - 1) * per_unit_ + margin_nodes_ + 2;
  zeta_ = field.sample_zeta_grid(0.0, dx_, static_cast<std::size_t>(total));
}

double ZetaGrid::solve_unit(long i, double eta) const {
  if (i < 1 || i > n_units_) throw std::invalid_argument("ZetaGrid: unit out of range");
  const std::size_t start = static_cast<std::size_t>((i - 1) * per_unit_);
  const std::span<const double> slice(zeta_.data() + start,
                                      static_cast<std::size_t>(margin_nodes_) + 2);
  return unit_from_grid(slice, eta, dx_, per_unit_);
}

double ZetaGrid::log_mgf_unit(long i, double eta) const {
  if (!(eta < 0.0)) throw std::domain_error("tilting defined for eta<0 only");
  return solve_unit(i, eta);
}

double ZetaGrid::d_log_mgf(long i, double eta, int order) const {
  if (!(eta < 0.0)) throw std::domain_error("tilting defined for eta<0 only");
  const double h = (order == 1 ? fd_step_ : std::sqrt(fd_step_)) * std::abs(eta);
  std::vector<double> l(5);
  const double offs[5] = {-h, -0.5 * h, 0.0, 0.5 * h, h};
  for (int k = 0; k < 5; ++k)
    l[static_cast<std::size_t>(k)] = solve_unit(i, eta + offs[k]);
  return order == 1 ? richardson_d1(l, h) : richardson_d2(l, h);
}

double ZetaGrid::avg_log_mgf(long x, double eta) const {
  if (!(eta < 0.0)) throw std::domain_error("tilting defined for eta<0 only");
  double sum = 0.0;
  for (long i = 1; i <= x; ++i) sum += solve_unit(i, eta);
  return sum / static_cast<double>(x);
}

double ZetaGrid::avg_derivative(long x, double eta) const {
  if (!(eta < 0.0)) throw std::domain_error("tilting defined for eta<0 only");
  const double h = fd_step_ * std::abs(eta);
  double l[5] = {0, 0, 0, 0, 0};
  const double offs[5] = {-h, -0.5 * h, 0.0, 0.5 * h, h};
  for (long i = 1; i <= x; ++i)
    for (int k = 0; k < 5; ++k) l[k] += solve_unit(i, eta + offs[k]);
  const std::vector<double> lv(l, l + 5);
  return richardson_d1(lv, h) / static_cast<double>(x);
}

double ZetaGrid::avg_derivative_second(long x, double eta) const {
  if (!(eta < 0.0)) throw std::domain_error("tilting defined for eta<0 only");
  const double h = std::sqrt(fd_step_) * std::abs(eta);
  double l[5] = {0, 0, 0, 0, 0};
  const double offs[5] = {-h, -0.5 * h, 0.0, 0.5 * h, h};
  for (long i = 1; i <= x; ++i)
    for (int k = 0; k < 5; ++k) l[k] += solve_unit(i, eta + offs[k]);
  const std::vector<double> lv(l, l + 5);
  return richardson_d2(lv, h) / static_cast<double>(x);
}

ZetaGrid::Tilt ZetaGrid::empirical_tilt(long x, double v) const {
  if (!(v > 0.0)) throw std::invalid_argument("empirical_tilt: v must be positive");
  Tilt out;
  const double target = 1.0 / v;
  double hi = kEtaMax;
  double g_hi = avg_derivative(x, hi);
  if (g_hi < target) return out;  // derivative never reaches 1/v: eta_x = 0
  double lo = kEtaMin;
  double g_lo = avg_derivative(x, lo);
  if (g_lo > target) return out;  // root below the clamped domain
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = avg_derivative(x, mid);
    if (g > target)
      hi = mid;
    else
      lo = mid;
    if (std::abs(g * v - 1.0) < 1e-10) {
      out.eta_x = mid;
      out.found = true;
      return out;
    }
  }
  out.eta_x = 0.5 * (lo + hi);
  out.found = true;
  return out;
}

}  // namespace randfront
