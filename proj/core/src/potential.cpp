#include "randfront/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>

#include "randfront/rng.hpp"

namespace randfront {

namespace {

constexpr double kMollifierSupSlope = 4.34071417142;  // sup |phi'|, unit width

double floor_div_index(double x, double cell) {
  return std::floor(x / cell);
}

}  // namespace

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::constant: return "constant";
    case PotentialKind::smoothed_block: return "smoothed_block";
    case PotentialKind::matern_bump: return "matern_bump";
  }
  return "?";
}

PotentialKind potential_kind_from_string(std::string_view name) {
  if (name == "constant") return PotentialKind::constant;
  if (name == "smoothed_block") return PotentialKind::smoothed_block;
  if (name == "matern_bump") return PotentialKind::matern_bump;
  throw std::invalid_argument("unknown potential kind: " + std::string(name));
}

void PotentialSpec::validate() const {
  if (!(ei > 0.0)) throw std::invalid_argument("potential: ei must be positive");
  if (!(es >= ei)) throw std::invalid_argument("potential: es must be >= ei");
  if (!(cell_size > 0.0)) throw std::invalid_argument("potential: cell_size must be positive");
  switch (kind) {
    case PotentialKind::constant:
      if (es != ei) throw std::invalid_argument("constant potential requires es == ei");
      break;
    case PotentialKind::matern_bump:
      if (!(bump_amplitude > 0.0))
        throw std::invalid_argument("matern_bump: bump amplitude a must be positive");
      if (es != ei + bump_amplitude)
        throw std::invalid_argument("matern_bump: es must equal ei + a exactly");
      if (!(mollifier_width > 0.0 && mollifier_width < 1.0))
        throw std::invalid_argument("matern_bump: epsilon must lie in (0,1)");
      if (cell_size > mollifier_width)
        throw std::invalid_argument(
            "matern_bump: cell_size must be <= epsilon (finite-range dependency)");
      break;
    case PotentialKind::smoothed_block:
      if (!(kernel_radius >= cell_size))
        throw std::invalid_argument("smoothed_block: kernel_radius must be >= cell_size");
      break;
  }
}

PotentialSpec PotentialSpec::constant_field(double value, std::uint64_t seed) {
  PotentialSpec s;
  s.kind = PotentialKind::constant;
  s.ei = s.es = value;
  s.seed = seed;
  s.validate();
  return s;
}

PotentialSpec PotentialSpec::matern(double ei, double a, double epsilon,
                                    std::uint64_t seed) {
  PotentialSpec s;
  s.kind = PotentialKind::matern_bump;
  s.ei = ei;
  s.bump_amplitude = a;
  s.es = ei + a;
  s.mollifier_width = epsilon;
  s.cell_size = epsilon;  // keeps the dependency range within 2(1+epsilon)
  s.seed = seed;
  s.validate();
  return s;
}

PotentialSpec PotentialSpec::smoothed(double ei, double es, double kernel_radius,
                                      std::uint64_t seed, double cell_size) {
  PotentialSpec s;
  s.kind = PotentialKind::smoothed_block;
  s.ei = ei;
  s.es = es;
  s.kernel_radius = kernel_radius;
  s.cell_size = cell_size;
  s.seed = seed;
  s.validate();
  return s;
}

double mollifier_value(double x, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("mollifier: epsilon must be positive");
  const double u = x / epsilon;
  const double q = 2.0 * u;
  if (q <= -1.0 || q >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - q * q));
}

double mollifier_sup_slope() { return kMollifierSupSlope; }

struct PotentialField::State {
  PotentialSpec spec;
  double phase = 0.0;         // smoothed_block lattice offset in [0, cell)
  int neighbor_cells = 0;     // matern thinning consult radius, ceil(1/cell)
  double block_lip = -1.0;    // cached smoothed_block Lipschitz bound

  mutable std::shared_mutex mutex;
  mutable std::unordered_map<std::int64_t, std::vector<double>> raw;
  mutable std::unordered_map<std::int64_t, std::vector<double>> retained;
  mutable std::unordered_map<std::int64_t, double> coef;

  explicit State(PotentialSpec s) : spec(std::move(s)) {
    spec.validate();
    if (spec.kind == PotentialKind::matern_bump)
      neighbor_cells = static_cast<int>(std::ceil(1.0 / spec.cell_size));
    if (spec.kind == PotentialKind::smoothed_block) {
      CounterRng rng(derive_seed(spec.seed, "lattice-phase"), 0);
      phase = rng.uniform() * spec.cell_size;
    }
  }

  std::vector<double> make_raw(std::int64_t k) const {
    CounterRng rng(derive_seed(spec.seed, "poisson-cell", static_cast<std::uint64_t>(k)), 0);
    const int n = rng.poisson(spec.cell_size);
    std::vector<double> pts(static_cast<std::size_t>(n));
    const double lo = static_cast<double>(k) * spec.cell_size;
    for (auto& p : pts) p = lo + spec.cell_size * rng.uniform();
    std::sort(pts.begin(), pts.end());
    return pts;
  }

  const std::vector<double>& raw_points(std::int64_t k) const {
    {
      std::shared_lock lock(mutex);
      auto it = raw.find(k);
      if (it != raw.end()) return it->second;
    }
    auto pts = make_raw(k);
    std::unique_lock lock(mutex);
    return raw.try_emplace(k, std::move(pts)).first->second;
  }

  // Simultaneous deletion: p survives iff no raw point (own or neighbouring
  // cells) lies within distance 1. Consulting a fixed neighbourhood keeps the
  // answer independent of evaluation order.
  std::vector<double> make_retained(std::int64_t k) const {
    std::vector<double> neighborhood;
    for (std::int64_t j = k - neighbor_cells; j <= k + neighbor_cells; ++j) {
      const auto& pts = raw_points(j);
      neighborhood.insert(neighborhood.end(), pts.begin(), pts.end());
    }
    std::sort(neighborhood.begin(), neighborhood.end());
    std::vector<double> out;
    for (double p : raw_points(k)) {
      bool crowded = false;
      for (double q : neighborhood) {
        if (q == p) continue;
        if (std::abs(q - p) <= 1.0) {
          crowded = true;
          break;
        }
      }
      if (!crowded) out.push_back(p);
    }
    return out;
  }

  const std::vector<double>& retained_points(std::int64_t k) const {
    {
      std::shared_lock lock(mutex);
      auto it = retained.find(k);
      if (it != retained.end()) return it->second;
    }
    auto pts = make_retained(k);
    std::unique_lock lock(mutex);
    return retained.try_emplace(k, std::move(pts)).first->second;
  }

  double block_coef(std::int64_t k) const {
    {
      std::shared_lock lock(mutex);
      auto it = coef.find(k);
      if (it != coef.end()) return it->second;
    }
    CounterRng rng(derive_seed(spec.seed, "block-coef", static_cast<std::uint64_t>(k)), 0);
    const double u = rng.uniform();
    std::unique_lock lock(mutex);
    return coef.try_emplace(k, u).first->second;
  }

  // C^2 compact kernel on [-1,1].
  static double kernel(double r) {
    const double s = 1.0 - r * r;
    return s > 0.0 ? s * s * s : 0.0;
  }
  static double kernel_deriv(double r) {
    const double s = 1.0 - r * r;
    return s > 0.0 ? -6.0 * r * s * s : 0.0;
  }

  double zeta(double x) const {
    switch (spec.kind) {
      case PotentialKind::constant:
        return 0.0;
      case PotentialKind::matern_bump: {
        const double w = 0.5 * spec.mollifier_width;
        const auto klo = static_cast<std::int64_t>(floor_div_index(x - w, spec.cell_size));
        const auto khi = static_cast<std::int64_t>(floor_div_index(x + w, spec.cell_size));
        double sum = 0.0;
        for (std::int64_t k = klo; k <= khi; ++k) {
          for (double p : retained_points(k)) {
            if (std::abs(x - p) < w) sum += mollifier_value(x - p, spec.mollifier_width);
          }
        }
        // Retained points are > 1 apart and epsilon < 1, so supports never overlap.
        const double a = spec.bump_amplitude;
        return std::min(0.0, std::max(-a, -a + a * sum));
      }
      case PotentialKind::smoothed_block: {
        const double r = spec.kernel_radius;
        const double c = spec.cell_size;
        const auto klo =
            static_cast<std::int64_t>(std::floor((x - r - phase) / c - 0.5)) - 1;
        const auto khi =
            static_cast<std::int64_t>(std::ceil((x + r - phase) / c - 0.5)) + 1;
        double num = 0.0, den = 0.0;
        for (std::int64_t k = klo; k <= khi; ++k) {
          const double center = (static_cast<double>(k) + 0.5) * c + phase;
          const double kv = kernel((x - center) / r);
          if (kv <= 0.0) continue;
          num += block_coef(k) * kv;
          den += kv;
        }
        const double t = den > 0.0 ? num / den : 0.0;
        const double range = spec.es - spec.ei;
        return std::min(0.0, std::max(-range, range * (t - 1.0)));
      }
    }
    return 0.0;
  }

  double smoothed_lipschitz() {
    if (block_lip >= 0.0) return block_lip;
    // max_x sum_k |w_k'(x)| over one lattice period; |xi'| <= (es-ei) * that
    // because sum_k w_k' = 0 and the coefficients lie in [0,1].
    const double r = spec.kernel_radius;
    const double c = spec.cell_size;
    const int kmax = static_cast<int>(std::ceil(r / c)) + 1;
    double worst = 0.0;
    const int steps = 4000;
    for (int s = 0; s <= steps; ++s) {
      const double x = c * static_cast<double>(s) / steps;
      double kv[128], kd[128];
      int m = 0;
      double S = 0.0, Sd = 0.0;
      for (int k = -kmax; k <= kmax && m < 128; ++k) {
        const double center = (static_cast<double>(k) + 0.5) * c;
        const double u = (x - center) / r;
        kv[m] = kernel(u);
        kd[m] = kernel_deriv(u) / r;
        S += kv[m];
        Sd += kd[m];
        ++m;
      }
      if (S <= 0.0) continue;
      double tot = 0.0;
      for (int i = 0; i < m; ++i) tot += std::abs((kd[i] * S - kv[i] * Sd) / (S * S));
      worst = std::max(worst, tot);
    }
    block_lip = (spec.es - spec.ei) * worst * 1.02;  // grid-scan safety margin
    return block_lip;
  }
};

PotentialField::PotentialField(PotentialSpec spec)
    : state_(std::make_shared<State>(std::move(spec))) {}

const PotentialSpec& PotentialField::spec() const { return state_->spec; }

double PotentialField::evaluate(double x) const {
  return state_->spec.es + state_->zeta(x + shift_);
}

double PotentialField::evaluate_zeta(double x) const {
  return evaluate(x) - state_->spec.es;
}

PotentialField PotentialField::shifted(double h) const {
  PotentialField f = *this;  // shares the memo
  f.shift_ += h;
  return f;
}

void PotentialField::sample_grid(double x0, double dx, std::size_t n,
                                 std::span<double> out) const {
  if (!(dx > 0.0)) throw std::invalid_argument("sample_grid: dx must be positive");
  if (out.size() < n) throw std::invalid_argument("sample_grid: output too small");
  for (std::size_t i = 0; i < n; ++i)
    out[i] = evaluate(x0 + dx * static_cast<double>(i));
}

std::vector<double> PotentialField::sample_grid(double x0, double dx, std::size_t n) const {
  std::vector<double> out(n);
  sample_grid(x0, dx, n, out);
  return out;
}

std::vector<double> PotentialField::sample_zeta_grid(double x0, double dx,
                                                     std::size_t n) const {
  std::vector<double> out(n);
  const double es = state_->spec.es;
  for (std::size_t i = 0; i < n; ++i)
    out[i] = evaluate(x0 + dx * static_cast<double>(i)) - es;
  return out;
}

std::pair<std::int64_t, std::int64_t> PotentialField::dependency_cells(double x) const {
  const auto& spec = state_->spec;
  const double eff = x + shift_;
  switch (spec.kind) {
    case PotentialKind::constant:
      return {1, 0};  // empty
    case PotentialKind::matern_bump: {
      const double reach = 1.0 + 0.5 * spec.mollifier_width;
      return {static_cast<std::int64_t>(floor_div_index(eff - reach, spec.cell_size)),
              static_cast<std::int64_t>(floor_div_index(eff + reach, spec.cell_size))};
    }
    case PotentialKind::smoothed_block: {
      const double c = spec.cell_size;
      const double r = spec.kernel_radius;
      // cells whose centre lies strictly within the kernel support
      auto lo = static_cast<std::int64_t>(std::ceil((eff - r - state_->phase) / c - 0.5));
      auto hi = static_cast<std::int64_t>(std::floor((eff + r - state_->phase) / c - 0.5));
      return {lo, hi};
    }
  }
  return {1, 0};
}

double PotentialField::dependency_range() const {
  const auto& spec = state_->spec;
  switch (spec.kind) {
    case PotentialKind::constant: return 0.0;
    case PotentialKind::matern_bump: return 2.0 * (1.0 + spec.mollifier_width);
    case PotentialKind::smoothed_block:
      return 2.0 * std::max(spec.kernel_radius, 1.0 + spec.mollifier_width);
  }
  return 0.0;
}

double PotentialField::lipschitz_bound() const {
  const auto& spec = state_->spec;
  switch (spec.kind) {
    case PotentialKind::constant:
      return 0.0;
    case PotentialKind::matern_bump:
      return spec.bump_amplitude * kMollifierSupSlope / spec.mollifier_width;
    case PotentialKind::smoothed_block:
      return state_->smoothed_lipschitz();
  }
  return 0.0;
}

double PotentialField::resolution_hint() const {
  const auto& spec = state_->spec;
  switch (spec.kind) {
    case PotentialKind::constant:
      return std::numeric_limits<double>::infinity();
    case PotentialKind::matern_bump:
      return spec.mollifier_width / 40.0;
    case PotentialKind::smoothed_block:
      return spec.kernel_radius / 20.0;
  }
  return std::numeric_limits<double>::infinity();
}

std::vector<double> hardcore_thin(std::vector<double> points) {
  std::sort(points.begin(), points.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool crowded = false;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      if (std::abs(points[j] - points[i]) <= 1.0) {
        crowded = true;
        break;
      }
    }
    if (!crowded) out.push_back(points[i]);
  }
  return out;
}

std::vector<double> matern_points(const PotentialSpec& spec, double lo, double hi) {
  if (spec.kind != PotentialKind::matern_bump)
    throw std::invalid_argument("matern_points: spec is not matern_bump");
  if (!(hi > lo)) throw std::invalid_argument("matern_points: empty window");
  PotentialField field(spec);
  std::vector<double> out;
  const auto klo = static_cast<std::int64_t>(floor_div_index(lo, spec.cell_size));
  const auto khi = static_cast<std::int64_t>(floor_div_index(hi, spec.cell_size));
  for (std::int64_t k = klo; k <= khi; ++k) {
    for (double p : field.retained_points_in_cell(k)) {
      if (p >= lo && p < hi) out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

const std::vector<double>& PotentialField::retained_points_in_cell(std::int64_t k) const {
  if (state_->spec.kind != PotentialKind::matern_bump)
    throw std::invalid_argument("retained points exist only for matern_bump");
  return state_->retained_points(k);
}

}  // namespace randfront
