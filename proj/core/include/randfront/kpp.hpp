#pragma once

#include <string>
#include <vector>

#include "randfront/offspring.hpp"
#include "randfront/potential.hpp"
#include "randfront/solver_types.hpp"

namespace randfront {

// Reaction nonlinearity under the standard conditions: F(0)=F(1)=0, F>0 on
// (0,1), F'(0)=1=sup F(w)/w, F'(1)<0, (1-F'(w))/w bounded near 0.
class Nonlinearity {
 public:
  enum class Kind { logistic, offspring_generated, gm_family, custom_table };

  Kind kind() const { return kind_; }
  int gm_index() const { return gm_n_; }
  const OffspringLaw& law() const { return law_; }
  bool exact_logistic() const {
    return kind_ == Kind::logistic || (kind_ == Kind::gm_family && gm_n_ == 1);
  }

  double operator()(double w) const;
  double derivative(double w) const;
  std::string name() const;

  static Nonlinearity logistic();
  static Nonlinearity gm(int n);
  static Nonlinearity from_offspring(const OffspringLaw& law);
  static Nonlinearity from_table(std::vector<double> w, std::vector<double> f,
                                 std::vector<double> df);

 private:
  Kind kind_ = Kind::logistic;
  int gm_n_ = 1;
  OffspringLaw law_;
  std::vector<double> tw_, tf_, tdf_;
};

// G_n(x) = (1-x)/n (1 - (1-x)^n); G_1 is the logistic nonlinearity.
Nonlinearity gm_family(int n);

// F(u) = 1 - u - sum_k p_k (1-u)^k from an offspring law with mean 2.
Nonlinearity offspring_to_F(const OffspringLaw& law);

// Numeric audit of the standard conditions on a 1e-3 grid, with witnesses.
struct ScClause {
  std::string name;
  bool pass = false;
  double witness = 0.0;
};
struct ScReport {
  std::vector<ScClause> clauses;
  bool all_pass() const;
  std::string summary() const;
};
ScReport check_sc(const Nonlinearity& f);

// Smallest M <= 1e6 with G_M <= F + 1e-12 on a 1e-4 grid.
int dominating_gm(const Nonlinearity& f);

// F-KPP solver w_t = (1/2) w_xx + xi(x) F(w): Crank-Nicolson diffusion
// half-steps around the reaction step; exact per-cell logistic update when F
// is logistic, RK4 substeps otherwise, with monitored clamping to [0,1].
SolutionTrajectory solve_kpp(const PotentialField& field, const Nonlinearity& f,
                             const InitialCondition& w0, const GridConfig& grid,
                             double horizon);

// sup{x : w(t,x) >= eps} at a stored snapshot time, plain interpolation.
double front_kpp(const SolutionTrajectory& traj, double eps, double t);

FrontTrace kpp_front_trace(const SolutionTrajectory& traj, double eps);

}  // namespace randfront
