#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "randfront/hitting.hpp"
#include "randfront/interp.hpp"
#include "randfront/potential.hpp"
#include "randfront/stats.hpp"

namespace randfront {

struct LyapunovConfig {
  double eta_min = -20.0;
  double eta_max = -1e-3;
  long eta_points = 400;
  long n_env = 64;      // environment replicas for the eta tables
  long n_units = 64;    // crossing units per replica
  long sigma_env = 512; // replicas for the variance constants
  long lag_cutoff = 12; // covariance truncation; checked against a doubled window
  double v_lo_factor = 0.5;  // velocity table spans [lo*v0, hi*v0]
  double v_hi_factor = 1.5;
  long v_points = 33;
  unsigned jobs = 0;

  void validate() const;
};

// Tilting parameter eta_x^zeta(v); found=false encodes the convention
// eta_x = 0 when the empirical derivative never reaches 1/v.
struct TiltSolution {
  double x = 0.0;
  double v = 0.0;
  double eta_x = 0.0;
  bool found = false;
};

// Deterministic limit objects of one potential specification: the annealed
// crossing log-MGF L, its Legendre calculus, the velocities v0 and vc, and
// the variance constants for the central limit theorems.
class LyapunovProfile {
 public:
  PotentialSpec spec;
  BvpConfig bvp;
  LyapunovConfig cfg;

  std::vector<double> eta_grid;  // ascending, in [eta_min, eta_max]
  std::vector<double> L_tab, L_se_tab, dL_tab, d2L_tab;

  std::vector<double> v_grid;
  std::vector<double> eta_bar_tab, legendre_tab, lambda_tab;

  double L0 = 0.0;       // L(0-) extrapolated in sqrt(-eta)
  double dL0 = 0.0;      // 1/vc before clamping; 0 means divergent slope
  double vc = 0.0;       // 1/L'(0-), 0 when the slope diverges
  double v0 = 0.0;       // positive root of Lambda
  double v0_variational = 0.0;  // inf_eta (eta - es)/L(eta)
  bool v0_var_at_boundary = false;  // infimum reached at eta -> 0-
  bool vel_ok = false;   // v0 > vc

  double eta_bar_v0 = 0.0;
  double sigma2_v0 = 0.0;
  double sigma2_v0_se = 0.0;
  double sigma2_v0_doubled_lag = 0.0;  // plateau check value
  double sigma_tilde2 = 0.0;

  double es() const { return spec.es; }

  // Interpolated tables.
  double L_at(double eta) const;
  double dL_at(double eta) const;

  // Root of L'(eta) = 1/v; throws below the critical velocity.
  double eta_bar(double v) const;
  // L*(1/v) = eta_bar/v - L(eta_bar).
  double legendre_star(double v) const;
  // Dual route: direct maximization of eta/v - L(eta) on the interpolant.
  double legendre_star_by_sup(double v) const;
  // es - v L*(1/v) for v >= vc, linear segment es + v L(0) on [0, vc).
  double lambda(double v) const;

  std::string text_report() const;

 private:
  friend LyapunovProfile build_profile(const PotentialSpec&, const BvpConfig&,
                                       const LyapunovConfig&);
  std::shared_ptr<const MonotoneCubic> L_interp_, dL_interp_;
};

// Monte Carlo estimate of L(eta) over n_env independent environments with
// n_units crossing units each; the standard error comes from the environment
// replica means.
MeanSe expected_log_mgf(const PotentialSpec& spec, double eta, long n_env,
                        long n_units, const BvpConfig& bvp, unsigned jobs = 0);

LyapunovProfile build_profile(const PotentialSpec& spec, const BvpConfig& bvp,
                              const LyapunovConfig& cfg);

// Root of (Lbar_x)'(eta) = 1/v for one environment realization.
TiltSolution empirical_tilt(const PotentialField& field, double x, double v,
                            const BvpConfig& bvp);

// sigma_v^2: variance of V_i = eta_bar(v)/v - L_i(eta_bar(v)) plus twice the
// covariances up to lag_cutoff, averaged over environment replicas.
MeanSe sigma_v2(const LyapunovProfile& profile, double v, long n_units,
                long lag_cutoff, long n_env, unsigned jobs = 0);

// W_x^v(1) = sqrt(x) ((Lbar_x)*(1/v) - L*(1/v)).
struct LegendreProcessValue {
  double w = 0.0;
  double eta_x = 0.0;
  bool tilt_found = false;
};
LegendreProcessValue empirical_legendre_process(const LyapunovProfile& profile,
                                                const PotentialField& field,
                                                double v, double x);

}  // namespace randfront
