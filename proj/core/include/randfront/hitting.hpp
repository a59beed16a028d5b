#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "randfront/potential.hpp"

namespace randfront {

// Discretization of the crossing problems. The elliptic solves use a Numerov
// tridiagonal scheme with a WKB Robin closure at the far end; the
// time-constrained functionals use Crank-Nicolson with a Rannacher start.
struct BvpConfig {
  double dx = 0.01;           // elliptic spatial step (snapped to divide 1)
  double right_margin = 30.0; // truncation distance beyond the start point
  double eta_fd_step = 1e-4;  // relative step for eta-derivatives
  double k_win = 5.0;         // width of the near-boundary time window for Y
  double pde_dx = 0.02;       // parabolic spatial step
  double pde_dt = 0.02;       // parabolic time step

  void validate() const;  // throws std::invalid_argument
  // Step actually used for `field`: refined below the potential's length scale.
  double effective_dx(const PotentialField& field) const;
};

// Public eta domain. Tilting degenerates as eta -> 0- and is numerically
// trivial below; all operations clamp their searches to this interval.
inline constexpr double kEtaMin = -20.0;
inline constexpr double kEtaMax = -1e-3;

// ln E_i[exp int_0^{H_{i-1}} (zeta(B)+eta) ds]: the unit crossing log-MGF
// L_i^zeta(eta), via the two-point boundary value problem
//   (1/2) phi'' + (zeta(y)+eta) phi = 0,  phi(i-1) = 1,
//   phi'(R) = -sqrt(2(-zeta(R)-eta)) phi(R) at R = i-1+right_margin.
double log_mgf_unit(const PotentialField& field, long i, double eta,
                    const BvpConfig& cfg);

// Crossing from non-integer x to ceil(x)-1.
double log_mgf_partial(const PotentialField& field, double x, double eta,
                       const BvpConfig& cfg);

// (1/x) ln E_x[exp int_0^{H_0} (zeta+eta)]: unit sum plus partial term.
double log_mgf_avg(const PotentialField& field, double x, double eta,
                   const BvpConfig& cfg);

// eta-derivatives of log_mgf_unit by Richardson-extrapolated central
// differences; order 1 or 2. Both are positive for eta < 0.
double d_log_mgf(const PotentialField& field, long i, double eta, int order,
                 const BvpConfig& cfg);

// Time-constrained crossing functionals: g solves g_t = (1/2)g_yy + zeta g on
// (0, x+margin) with g(s,0)=1, g(0,y)=0, absorbing far right. Returns
// (g(t,x), g(t-k_win,x)); Y^> is the second entry and Y^~ their difference.
std::pair<double, double> hitting_time_functional(const PotentialField& field,
                                                  double x, double t,
                                                  const BvpConfig& cfg);

// One parabolic sweep serving many probes: for each requested x, records
// (g(x/v, x), g(x/v - k_win, x)). Probes must be sorted increasing.
struct YDecomposition {
  double x = 0.0;
  double y_total = 0.0;   // g(t, x) = Y_v(x)
  double y_above = 0.0;   // g(t - K, x) = Y_v^>(x)
  double y_window = 0.0;  // difference = Y_v^~(x)
};
std::vector<YDecomposition> y_decomposition_batch(const PotentialField& field,
                                                  std::span<const double> xs,
                                                  double v, const BvpConfig& cfg);

// Pre-sampled environment for batch work on [0, n_units + right_margin]:
// shares one zeta grid across every unit index and eta, which is what the
// profile builder and the empirical-tilt searches hammer on.
class ZetaGrid {
 public:
  ZetaGrid(const PotentialField& field, long n_units, const BvpConfig& cfg);

  long n_units() const { return n_units_; }
  double dx() const { return dx_; }

  double log_mgf_unit(long i, double eta) const;          // i in [1, n_units]
  double d_log_mgf(long i, double eta, int order) const;  // derivatives

  // (Lbar_x)(eta) and its eta-derivatives for integer x in [1, n_units].
  double avg_log_mgf(long x, double eta) const;
  double avg_derivative(long x, double eta) const;
  double avg_derivative_second(long x, double eta) const;

  // Empirical tilt: root of (Lbar_x)'(eta) = 1/v on [kEtaMin, kEtaMax].
  // found=false (eta_x = 0) when no negative root exists.
  struct Tilt {
    double eta_x = 0.0;
    bool found = false;
  };
  Tilt empirical_tilt(long x, double v) const;

 private:
  double solve_unit(long i, double eta) const;
  long n_units_ = 0;
  double dx_ = 0.0;
  long per_unit_ = 0;
  long margin_nodes_ = 0;
  double fd_step_ = 1e-4;
  std::vector<double> zeta_;
};

}  // namespace randfront
