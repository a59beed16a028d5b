#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace randfront {

struct GridConfig {
  double dx = 0.05;
  double dt = 0.01;
  double window_left = 40.0;   // margin kept behind the tracked front
  double window_right = 60.0;  // margin kept ahead of it
  double snapshot_dt = 0.5;
  // Absolute level whose rightmost crossing anchors the moving window; keep
  // it at the front threshold under study. Scaling the data and this level
  // together reproduces the identical discrete evolution.
  double track_level = 0.5;

  void validate() const;
};

enum class InitialKind { heaviside, box, scaled_heaviside };

// Admissible initial data: delta' 1_{[-delta',0]} <= u0 <= C' 1_{(-inf,0]}.
struct InitialCondition {
  InitialKind kind = InitialKind::heaviside;
  double delta_prime = 0.5;  // box height and width, in (0,1)
  double c_prime = 2.0;      // scaled-heaviside factor, > 1

  double value_at(double x) const;
  // Average over [x - dx/2, x + dx/2]; keeps discontinuous data centred on
  // the grid instead of biased by half a cell.
  double cell_average(double x, double dx) const;
  void validate() const;

  static InitialCondition heaviside();
  static InitialCondition box(double delta_prime);
  static InitialCondition scaled_heaviside(double c_prime);
};

struct Snapshot {
  double t = 0.0;
  double x_left = 0.0;      // window start, absolute coordinate
  double log_offset = 0.0;  // accumulated renormalization (0 in plain form)
  std::vector<double> values;
};

inline constexpr double kFrontNotReached = -std::numeric_limits<double>::infinity();
inline constexpr double kNeverReached = std::numeric_limits<double>::infinity();

// Space-time history of one solve. PAM stores the max-normalized field with
// ln u = log_offset + ln value; KPP stores plain values in [0,1].
class SolutionTrajectory {
 public:
  bool log_form = false;
  double dx = 0.0;
  double dt = 0.0;
  double horizon = 0.0;
  double track_level = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<double> step_times;   // per-step front trace
  std::vector<double> step_fronts;  // tracked level

  std::size_t snapshot_index(double t) const;  // nearest stored time, throws if far
  bool x_in_window(std::size_t snap, double x) const;
  // ln u(t_snap, x); -inf where the stored value vanishes.
  double ln_value(std::size_t snap, double x) const;
  // plain value (KPP form, or normalized PAM value).
  double plain_value(std::size_t snap, double x) const;
};

// Front trace at a fixed threshold with the breakpoint records.
struct FrontTrace {
  double threshold = 0.0;
  std::vector<double> times;
  std::vector<double> positions;
  struct Breakpoint {
    double x;
    double t;  // T_x, +inf when not reached by the horizon
  };
  std::vector<Breakpoint> breakpoints;
};

}  // namespace randfront
