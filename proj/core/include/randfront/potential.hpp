#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace randfront {

enum class PotentialKind { constant, smoothed_block, matern_bump };

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(std::string_view name);

// One random medium xi(x). For matern_bump the upper bound is es = ei + a
// exactly; for constant the single value is es (= ei).
struct PotentialSpec {
  PotentialKind kind = PotentialKind::constant;
  double ei = 1.0;
  double es = 1.0;
  double bump_amplitude = 0.0;   // a, matern_bump only
  double mollifier_width = 0.5;  // epsilon in (0,1)
  double kernel_radius = 2.0;    // smoothed_block only, >= cell_size
  double cell_size = 1.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument

  static PotentialSpec constant_field(double value, std::uint64_t seed = 0);
  static PotentialSpec matern(double ei, double a, double epsilon, std::uint64_t seed);
  static PotentialSpec smoothed(double ei, double es, double kernel_radius,
                                std::uint64_t seed, double cell_size = 1.0);
};

// Smooth bump: exp(1 - 1/(1-(2u)^2)) for |u| < 1/2, with u = x/epsilon.
// Peak value 1 at 0, support [-epsilon/2, epsilon/2].
double mollifier_value(double x, double epsilon);

// sup |phi'| of the unit-width bump; the Lipschitz constant of a bump of
// width epsilon and height a is a * mollifier_sup_slope() / epsilon.
double mollifier_sup_slope();

// Unit-rate Poisson points in [lo, hi) after simultaneous hardcore deletion:
// every raw point whose nearest raw neighbour lies at distance <= 1 is
// removed. Deterministic in (spec.seed, absolute cell index).
std::vector<double> matern_points(const PotentialSpec& spec, double lo, double hi);

// Single-pass simultaneous deletion over an explicit configuration: the
// brute-force oracle the cell-based thinning is checked against.
std::vector<double> hardcore_thin(std::vector<double> points);

// Evaluable medium with a lazy per-cell memo shared across copies and shifts.
// evaluate() is a pure function of (spec.seed, x + shift_offset).
class PotentialField {
 public:
  explicit PotentialField(PotentialSpec spec);

  const PotentialSpec& spec() const;
  double shift_offset() const { return shift_; }

  double evaluate(double x) const;       // xi(x), in [ei, es]
  double evaluate_zeta(double x) const;  // xi(x) - es, in [-(es-ei), 0]

  // Field with evaluate(shifted(h), x) == evaluate(*this, x + h) exactly.
  PotentialField shifted(double h) const;

  void sample_grid(double x0, double dx, std::size_t n, std::span<double> out) const;
  std::vector<double> sample_grid(double x0, double dx, std::size_t n) const;
  std::vector<double> sample_zeta_grid(double x0, double dx, std::size_t n) const;

  // Absolute cell-index range whose stored randomness can influence
  // evaluate(x). Ranges for |x-y| > 2*max(kernel_radius, 1+epsilon) are
  // disjoint, realizing finite-range mixing.
  std::pair<std::int64_t, std::int64_t> dependency_cells(double x) const;
  double dependency_range() const;

  // Analytic bound on |xi(x)-xi(y)|/|x-y| for this construction.
  double lipschitz_bound() const;

  // Finest potential length scale; solvers refine their spatial step below it.
  double resolution_hint() const;

  // Hardcore-thinned bump centres of cell k (matern_bump only).
  const std::vector<double>& retained_points_in_cell(std::int64_t k) const;

 private:
  struct State;
  std::shared_ptr<State> state_;
  double shift_ = 0.0;
};

}  // namespace randfront
