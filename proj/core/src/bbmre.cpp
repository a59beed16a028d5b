#include "randfront/bbmre.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "randfront/parallel.hpp"
#include "randfront/rng.hpp"

namespace randfront {

namespace {

int sample_offspring(const OffspringLaw& law, CounterRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t k = 1; k < law.p.size(); ++k) {
    acc += law.p[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(law.p.size()) - 1;
}

struct Pending {
  double pos;
  double t;
};

// No-exit probability of a Brownian bridge from p to q over tau inside
// (lo, hi), via the reflection (image) series of the killed heat kernel.
double bridge_stay_probability(double p, double q, double tau, double lo, double hi) {
  if (tau <= 0.0) return 1.0;
  const double L = hi - lo;
  const double inv2t = 1.0 / (2.0 * tau);
  const double base = std::exp(-(q - p) * (q - p) * inv2t);
  if (base == 0.0) return 0.0;
  double acc = 0.0;
  for (int k = 0;; ++k) {
    double term = 0.0;
    const double shifts[2] = {2.0 * static_cast<double>(k) * L,
                              -2.0 * static_cast<double>(k) * L};
    const int reps = k == 0 ? 1 : 2;
    for (int r = 0; r < reps; ++r) {
      const double sh = shifts[r];
      term += std::exp(-(q - p + sh) * (q - p + sh) * inv2t);
      term -= std::exp(-(q + p - 2.0 * lo + sh) * (q + p - 2.0 * lo + sh) * inv2t);
    }
    acc += term;
    if (k > 0 && std::abs(term) < 1e-16 * std::max(1.0, std::abs(acc))) break;
    if (k > 64) break;
  }
  return std::clamp(acc / base, 0.0, 1.0);
}

struct ReplicaSummary {
  std::size_t count = 0;  // particles counted (total or in-tube)
  bool cap_hit = false;
};

// Core replica walk. When tube tracking is on, lineages that leave the tube
// are pruned: they can never contribute an in-tube particle again.
ReplicaSummary run_replica(const PotentialField& field, const OffspringLaw& law,
                           double x0, double t_end, std::size_t cap,
                           std::uint64_t seed, bool tube, double lo, double hi,
                           double count_leq_level, bool use_level,
                           std::vector<double>* positions_out) {
  CounterRng rng(seed, 0);
  const double es = field.spec().es;
  ReplicaSummary out;
  if (tube && (x0 <= lo || x0 >= hi)) return out;

  std::vector<Pending> stack{{x0, 0.0}};
  std::size_t finished = 0;
  while (!stack.empty()) {
    Pending cur = stack.back();
    stack.pop_back();
    bool alive = true;
    while (alive) {
      const double wait = rng.exponential(es);
      const bool final_leg = cur.t + wait >= t_end;
      const double step_len = final_leg ? t_end - cur.t : wait;
      const double next_pos = cur.pos + rng.normal() * std::sqrt(std::max(step_len, 0.0));
      if (tube) {
        if (next_pos <= lo || next_pos >= hi) {
          alive = false;
          break;
        }
        const double p_stay =
            bridge_stay_probability(cur.pos, next_pos, step_len, lo, hi);
        if (rng.uniform() >= p_stay) {
          alive = false;
          break;
        }
      }
      cur.pos = next_pos;
      if (final_leg) {
        ++finished;
        if (positions_out) positions_out->push_back(cur.pos);
        if (!use_level || cur.pos <= count_leq_level) ++out.count;
        break;
      }
      cur.t += wait;
      // thinning: accept a branching event with probability xi/es
      if (rng.uniform() < field.evaluate(cur.pos) / es) {
        const int k = sample_offspring(law, rng);
        for (int c = 1; c < k; ++c) stack.push_back(cur);
        if (stack.size() + finished + 1 > cap) {
          out.cap_hit = true;
          return out;
        }
        // continue in place as the first child; k == 1 is a plain restart
      }
    }
  }
  return out;
}

}  // namespace

ParticleSystem simulate(const PotentialField& field, const OffspringLaw& law,
                        double x0, double t_end, std::size_t cap,
                        std::uint64_t seed) {
  law.validate();
  if (!(t_end > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
  if (cap < 1) throw std::invalid_argument("simulate: cap must be >= 1");
  ParticleSystem out;
  out.cap = cap;
  const auto summary = run_replica(field, law, x0, t_end, cap, seed, false, 0.0, 0.0,
                                   0.0, false, &out.positions);
  out.cap_hit = summary.cap_hit;
  out.time = summary.cap_hit ? -1.0 : t_end;
  out.lineages = out.positions.size();
  return out;
}

std::size_t count_leq(const ParticleSystem& sys, double y) {
  if (sys.cap_hit)
    throw std::runtime_error("count_leq: replica breached its population cap");
  std::size_t n = 0;
  for (double p : sys.positions)
    if (p <= y) ++n;
  return n;
}

namespace {

struct McAccumulator {
  double sum = 0.0;
  double sumsq = 0.0;
  std::size_t n = 0;
  std::size_t capped = 0;
  std::size_t hits = 0;  // replicas with count >= 1
};

McAccumulator run_ensemble(const PotentialField& field, const OffspringLaw& law,
                           double x, double t, std::size_t n_reps,
                           std::uint64_t seed, unsigned jobs) {
  law.validate();
  const unsigned blocks = 64;
  std::vector<McAccumulator> acc(blocks);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    const std::size_t lo = n_reps * b / blocks;
    const std::size_t hi = n_reps * (b + 1) / blocks;
    McAccumulator a;
    for (std::size_t r = lo; r < hi; ++r) {
      const auto s =
          run_replica(field, law, x, t, 1000000, derive_seed(seed, "bbmre-rep", r),
                      false, 0.0, 0.0, 0.0, true, nullptr);
      if (s.cap_hit) {
        ++a.capped;
        continue;
      }
      const double c = static_cast<double>(s.count);
      a.sum += c;
      a.sumsq += c * c;
      a.n += 1;
      if (s.count >= 1) ++a.hits;
    }
    acc[b] = a;
  });
  McAccumulator total;
  for (const auto& a : acc) {
    total.sum += a.sum;
    total.sumsq += a.sumsq;
    total.n += a.n;
    total.capped += a.capped;
    total.hits += a.hits;
  }
  if (total.capped * 100 > n_reps)
    throw std::runtime_error("bbmre: more than 1% of replicas hit the population cap");
  return total;
}

}  // namespace

MeanSe estimate_w(const PotentialField& field, const OffspringLaw& law, double x,
                  double t, std::size_t n_reps, std::uint64_t seed, unsigned jobs) {
  const auto total = run_ensemble(field, law, x, t, n_reps, seed, jobs);
  const auto prop = wilson_proportion(total.hits, total.n);
  return MeanSe{prop.p, prop.se, prop.n};
}

MeanSe estimate_mean_count(const PotentialField& field, const OffspringLaw& law,
                           double x, double t, std::size_t n_reps,
                           std::uint64_t seed, unsigned jobs) {
  const auto total = run_ensemble(field, law, x, t, n_reps, seed, jobs);
  MeanSe out;
  out.n = total.n;
  const double n = static_cast<double>(total.n);
  out.mean = total.sum / n;
  const double var = std::max(0.0, (total.sumsq - n * out.mean * out.mean) / (n - 1.0));
  out.se = std::sqrt(var / n);
  return out;
}

// ---------------------------------------------------------------------------
// Tube moments: exact-bridge Monte Carlo against the Feynman-Kac formulas
// ---------------------------------------------------------------------------

namespace {

// Killed parabolic sweep on [lo, hi]: u_t = (1/2) u_xx + xi u with absorbing
// ends, exact reaction factor Strang-split around Crank-Nicolson diffusion.
class KilledSweep {
 public:
  KilledSweep(const PotentialField& field, double lo, double hi, double dy)
      : lo_(lo) {
    n_ = std::max(8L, static_cast<long>(std::ceil((hi - lo) / dy)));
    dy_ = (hi - lo) / static_cast<double>(n_);
    xi_ = field.sample_grid(lo, dy_, static_cast<std::size_t>(n_) + 1);
    u_.assign(xi_.size(), 0.0);
    cp_.resize(u_.size());
    dp_.resize(u_.size());
    scratch_.resize(u_.size());
  }

  void set_uniform(double value) {
    std::fill(u_.begin(), u_.end(), value);
    u_.front() = 0.0;
    u_.back() = 0.0;
    steps_done_ = 0;
  }

  template <typename Fn>
  void set_from(Fn&& fn) {
    for (long j = 0; j <= n_; ++j)
      u_[static_cast<std::size_t>(j)] = fn(lo_ + dy_ * static_cast<double>(j), j);
    u_.front() = 0.0;
    u_.back() = 0.0;
    steps_done_ = 0;
  }

  const std::vector<double>& values() const { return u_; }
  double value_at_index(long j) const { return u_[static_cast<std::size_t>(j)]; }
  long index_of(double x) const { return std::lround((x - lo_) / dy_); }
  long nodes() const { return n_; }
  double node_x(long j) const { return lo_ + dy_ * static_cast<double>(j); }

  void advance(double duration, double dt_hint) {
    const long steps = std::max(2L, static_cast<long>(std::ceil(duration / dt_hint)));
    const double dt = duration / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
      const bool rannacher = steps_done_ < 2;
      for (std::size_t j = 0; j < u_.size(); ++j)
        u_[j] *= std::exp(0.5 * dt * xi_[j]);
      diffuse(dt, rannacher);
      for (std::size_t j = 0; j < u_.size(); ++j)
        u_[j] *= std::exp(0.5 * dt * xi_[j]);
      u_.front() = 0.0;
      u_.back() = 0.0;
      ++steps_done_;
    }
  }

 private:
  void diffuse(double dt, bool backward_euler) {
    const double r = dt / (4.0 * dy_ * dy_);
    const double ri = backward_euler ? 2.0 * r : r;
    const double re = backward_euler ? 0.0 : r;
    const std::size_t last = u_.size() - 1;
    cp_[0] = 0.0;
    dp_[0] = 0.0;
    for (std::size_t j = 1; j < last; ++j) {
      const double rhs = re * u_[j - 1] + (1.0 - 2.0 * re) * u_[j] + re * u_[j + 1];
      const double m = (1.0 + 2.0 * ri) - (-ri) * cp_[j - 1];
      cp_[j] = -ri / m;
      dp_[j] = (rhs + ri * dp_[j - 1]) / m;
    }
    scratch_[last] = 0.0;
    for (std::size_t j = last; j-- > 0;)
      scratch_[j] = dp_[j] - cp_[j] * scratch_[j + 1];
    scratch_[0] = 0.0;
    u_.swap(scratch_);
  }

  double lo_ = 0.0;
  double dy_ = 0.0;
  long n_ = 0;
  long steps_done_ = 0;
  std::vector<double> xi_, u_, cp_, dp_, scratch_;
};

}  // namespace

TubeMoments tube_moments(const PotentialField& field, const OffspringLaw& law,
                         double x0, double t, double barrier_lo, double barrier_hi,
                         std::size_t n_reps, std::uint64_t seed, unsigned jobs) {
  law.validate();
  if (!(t > 0.0)) throw std::invalid_argument("tube_moments: t must be positive");
  const bool lo_inf = !std::isfinite(barrier_lo);
  const bool hi_inf = !std::isfinite(barrier_hi);
  // effective barriers: wide enough that the truncation is far below MC noise
  const double reach = 8.0 * std::sqrt(t) + 2.0;
  const double lo = lo_inf ? x0 - reach : barrier_lo;
  const double hi = hi_inf ? x0 + reach : barrier_hi;
  if (!(lo < x0 && x0 < hi))
    throw std::invalid_argument("tube_moments: barriers must straddle x0");
  const bool tube_checks = !(lo_inf && hi_inf);

  TubeMoments out;

  // ---- Monte Carlo ----------------------------------------------------------
  {
    const unsigned blocks = 64;
    struct Acc {
      double s1 = 0.0, s2 = 0.0, s4 = 0.0;
      std::size_t n = 0, capped = 0;
    };
    std::vector<Acc> acc(blocks);
    parallel_for(blocks, jobs, [&](std::size_t b) {
      const std::size_t rlo = n_reps * b / blocks;
      const std::size_t rhi = n_reps * (b + 1) / blocks;
      Acc a;
      for (std::size_t r = rlo; r < rhi; ++r) {
        const auto s = run_replica(field, law, x0, t, 1000000,
                                   derive_seed(seed, "tube-rep", r), tube_checks,
                                   lo, hi, 0.0, false, nullptr);
        if (s.cap_hit) {
          ++a.capped;
          continue;
        }
        const double c = static_cast<double>(s.count);
        a.s1 += c;
        a.s2 += c * c;
        a.s4 += c * c * c * c;
        a.n += 1;
      }
      acc[b] = a;
    });
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    std::size_t n = 0, capped = 0;
    for (const auto& a : acc) {
      s1 += a.s1;
      s2 += a.s2;
      s4 += a.s4;
      n += a.n;
      capped += a.capped;
    }
    if (capped * 100 > n_reps)
      throw std::runtime_error("tube_moments: more than 1% of replicas hit the cap");
    const double nn = static_cast<double>(n);
    out.mc_first.n = out.mc_second.n = n;
    out.mc_first.mean = s1 / nn;
    out.mc_second.mean = s2 / nn;
    const double v1 = std::max(0.0, (s2 - nn * out.mc_first.mean * out.mc_first.mean) / (nn - 1.0));
    const double v2 = std::max(0.0, (s4 - nn * out.mc_second.mean * out.mc_second.mean) / (nn - 1.0));
    out.mc_first.se = std::sqrt(v1 / nn);
    out.mc_second.se = std::sqrt(v2 / nn);
  }

  // ---- Feynman-Kac ----------------------------------------------------------
  {
    const double dy = std::min(0.02, field.resolution_hint() * 4.0);
    const double dt_hint = std::min(0.005, t / 64.0);
    const int n_s = 32;  // Simpson intervals in the branching-time integral

    // v(tau, .) for tau = j t/n_s, j = 0..n_s
    KilledSweep v(field, lo, hi, dy);
    v.set_uniform(1.0);
    std::vector<std::vector<double>> slices(static_cast<std::size_t>(n_s) + 1);
    slices[0] = v.values();  // tau = 0
    const double slab = t / static_cast<double>(n_s);
    for (int j = 1; j <= n_s; ++j) {
      v.advance(slab, dt_hint);
      slices[static_cast<std::size_t>(j)] = v.values();
    }
    const long xi0 = v.index_of(x0);
    out.fk1 = slices[static_cast<std::size_t>(n_s)][static_cast<std::size_t>(xi0)];

    // quadrature of E_x[e^{int xi} xi(B_s) (v(t-s, B_s))^2 ; stay] ds
    const double m2 = law.second_moment();
    if (std::abs(m2 - 2.0) > 1e-14) {
      std::vector<double> integrand(static_cast<std::size_t>(n_s) + 1, 0.0);
      parallel_for(static_cast<std::size_t>(n_s) + 1, jobs, [&](std::size_t j) {
        const double s = slab * static_cast<double>(j);
        // g(y) = xi(y) v(t-s, y)^2 evolved for time s under the killed flow
        KilledSweep g(field, lo, hi, dy);
        const auto& vslice = slices[static_cast<std::size_t>(n_s) - j];
        g.set_from([&](double y, long idx) {
          const double vv = vslice[static_cast<std::size_t>(idx)];
          return field.evaluate(y) * vv * vv;
        });
        if (s > 0.0) g.advance(s, dt_hint);
        integrand[j] = g.value_at_index(xi0);
      });
      double quad = 0.0;
      for (int j = 0; j < n_s; j += 2)
        quad += slab / 3.0 *
                (integrand[static_cast<std::size_t>(j)] +
                 4.0 * integrand[static_cast<std::size_t>(j) + 1] +
                 integrand[static_cast<std::size_t>(j) + 2]);
      out.fk2 = out.fk1 + (m2 - 2.0) * quad;
    } else {
      out.fk2 = out.fk1;
    }
  }
  return out;
}

}  // namespace randfront
