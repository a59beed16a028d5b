#pragma once

#include <cstdint>

#include "randfront/potential.hpp"
#include "randfront/solver_types.hpp"
#include "randfront/stats.hpp"

namespace randfront {

// Parabolic Anderson model u_t = (1/2) u_xx + xi(x) u on a moving window in
// log-renormalized form: Crank-Nicolson for the diffusion with the exact
// multiplication factor e^{xi dt/2} Strang-split around it, zero-Neumann at
// the left window edge, zero-Dirichlet at the right.
SolutionTrajectory solve_pam(const PotentialField& field, const InitialCondition& ic,
                             const GridConfig& grid, double horizon);

// sup{x : u(t,x) >= a} at a stored snapshot time, interpolated in ln u;
// kFrontNotReached when the level is never attained.
double front_pam(const SolutionTrajectory& traj, double a, double t);

// Breakpoint inverse T_x^(a): first time u(t,x) >= a, interpolated in ln u
// between snapshots; kNeverReached if the horizon ends first.
double breakpoint_inverse(const SolutionTrajectory& traj, double x, double a);

// Front trace at threshold a over the stored snapshots, with breakpoints at
// the integers inside [x_lo, x_hi].
FrontTrace pam_front_trace(const SolutionTrajectory& traj, double a, double x_lo,
                           double x_hi);

// Feynman-Kac Monte Carlo for u(t,x): exact Brownian increments, trapezoidal
// integral of xi along the path.
MeanSe fk_mc_pam(const PotentialField& field, double t, double x,
                 const InitialCondition& ic, std::size_t n_paths, double dt_path,
                 std::uint64_t seed, unsigned jobs = 0);

}  // namespace randfront
