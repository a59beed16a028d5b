#pragma once

#include <cstdint>

#include "randfront/offspring.hpp"
#include "randfront/potential.hpp"
#include "randfront/stats.hpp"

namespace randfront {

// Terminal state of one branching Brownian motion replica. Particles move as
// Brownian motions and branch at spatial rate xi(y) into k children with
// probability p_k. Simulation is exact: candidate events arrive at the
// dominating rate es and are accepted with probability xi(position)/es, and
// positions advance by exact Gaussian increments between events.
struct ParticleSystem {
  double time = 0.0;  // horizon, or the breach time when cap_hit
  std::vector<double> positions;
  std::uint64_t lineages = 0;  // total particles ever created
  std::size_t cap = 0;
  bool cap_hit = false;
};

ParticleSystem simulate(const PotentialField& field, const OffspringLaw& law,
                        double x0, double t_end, std::size_t cap,
                        std::uint64_t seed);

// |N(t, (-inf, y])|: throws when the replica breached its population cap.
std::size_t count_leq(const ParticleSystem& sys, double y);

// P_x(N<=(t,0) >= 1) over n_reps replicas, Wilson one-sigma half-width as se.
MeanSe estimate_w(const PotentialField& field, const OffspringLaw& law, double x,
                  double t, std::size_t n_reps, std::uint64_t seed,
                  unsigned jobs = 0);

// E_x[N<=(t,0)] over n_reps replicas.
MeanSe estimate_mean_count(const PotentialField& field, const OffspringLaw& law,
                           double x, double t, std::size_t n_reps,
                           std::uint64_t seed, unsigned jobs = 0);

// Monte Carlo and Feynman-Kac moments of the count of particles whose whole
// genealogy stays inside [barrier_lo, barrier_hi] up to t. Bridge exits
// between branching events are resolved exactly through the reflection
// series, so the Monte Carlo side carries no time-discretization bias.
// Infinite barriers are the +-inf sentinels.
struct TubeMoments {
  MeanSe mc_first;
  MeanSe mc_second;
  double fk1 = 0.0;  // killed-PAM solve of the first-moment formula
  double fk2 = 0.0;  // first moment + (m2-2) * Simpson quadrature term
};
TubeMoments tube_moments(const PotentialField& field, const OffspringLaw& law,
                         double x0, double t, double barrier_lo, double barrier_hi,
                         std::size_t n_reps, std::uint64_t seed, unsigned jobs = 0);

}  // namespace randfront
