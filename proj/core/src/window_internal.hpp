#pragma once

// Moving-window machinery shared by the PAM and F-KPP steppers. Internal.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "randfront/potential.hpp"
#include "randfront/solver_types.hpp"

namespace randfront::detail {

class MovingWindow {
 public:
  MovingWindow(const PotentialField& field, const GridConfig& grid)
      : field_(&field), grid_(grid) {
    grid_.validate();
    dx_ = std::min(grid_.dx, field.resolution_hint() * 4.0);
    const long per = std::max(1L, std::lround(1.0 / dx_));
    dx_ = 1.0 / static_cast<double>(per);
    n_ = static_cast<long>(
             std::ceil((grid_.window_left + grid_.window_right) / dx_)) +
         1;
    x_left_ = -grid_.window_left;
    u_.assign(static_cast<std::size_t>(n_), 0.0);
    xi_.resize(static_cast<std::size_t>(n_));
    refresh_xi(0, n_);
    cp_.resize(u_.size());
    dp_.resize(u_.size());
    scratch_.resize(u_.size());
  }

  long nodes() const { return n_; }
  double dx() const { return dx_; }
  double x_left() const { return x_left_; }
  double x_right() const { return x_left_ + dx_ * static_cast<double>(n_ - 1); }
  double x_at(long j) const { return x_left_ + dx_ * static_cast<double>(j); }
  std::vector<double>& values() { return u_; }
  const std::vector<double>& values() const { return u_; }
  const std::vector<double>& xi() const { return xi_; }

  void fill_initial(const InitialCondition& ic) {
    for (long j = 0; j < n_; ++j)
      u_[static_cast<std::size_t>(j)] = ic.cell_average(x_at(j), dx_);
  }

  // One Crank-Nicolson diffusion step of (1/2) u_xx over dt_step:
  // zero-Neumann left edge, zero-Dirichlet right edge.
  void cn_diffuse(double dt_step) {
    const double r = dt_step / (4.0 * dx_ * dx_);
    const std::size_t last = u_.size() - 1;
    // row 0, Neumann ghost u_{-1} = u_1
    {
      const double b = 1.0 + 2.0 * r;
      cp_[0] = -2.0 * r / b;
      dp_[0] = ((1.0 - 2.0 * r) * u_[0] + 2.0 * r * u_[1]) / b;
    }
    for (std::size_t j = 1; j < last; ++j) {
      const double rhs = r * u_[j - 1] + (1.0 - 2.0 * r) * u_[j] + r * u_[j + 1];
      const double m = (1.0 + 2.0 * r) - (-r) * cp_[j - 1];
      cp_[j] = -r / m;
      dp_[j] = (rhs + r * dp_[j - 1]) / m;
    }
    scratch_[last] = 0.0;
    for (std::size_t j = last; j-- > 0;)
      scratch_[j] = dp_[j] - cp_[j] * scratch_[j + 1];
    u_.swap(scratch_);
    u_.back() = 0.0;
  }

  // Recentre so the tracked front sits window_left behind the left edge.
  // Returns the number of cells shifted.
  long shift_for_front(double front) {
    const long k =
        static_cast<long>(std::floor((front - x_left_ - grid_.window_left) / dx_));
    if (k < 1) return 0;
    if (k >= n_) throw std::runtime_error("moving window jumped past its own width");
    std::copy(u_.begin() + k, u_.end(), u_.begin());
    std::fill(u_.end() - k, u_.end(), 0.0);
    std::copy(xi_.begin() + k, xi_.end(), xi_.begin());
    x_left_ += dx_ * static_cast<double>(k);
    refresh_xi(n_ - k, n_);
    return k;
  }

  void check_breach(double front, double horizon_t) const {
    if (front > x_right() - 5.0)
      throw std::runtime_error(
          "front reached the right window edge at t=" + std::to_string(horizon_t) +
          "; enlarge window_right (currently " + std::to_string(grid_.window_right) +
          ")");
  }

 private:
  void refresh_xi(long from, long to) {
    for (long j = from; j < to; ++j)
      xi_[static_cast<std::size_t>(j)] = field_->evaluate(x_at(j));
  }

  const PotentialField* field_;
  GridConfig grid_;
  double dx_ = 0.0;
  double x_left_ = 0.0;
  long n_ = 0;
  std::vector<double> u_, xi_, cp_, dp_, scratch_;
};

// Rightmost grid crossing of `level` in plain values, linear interpolation.
inline double plain_front(const std::vector<double>& u, double x_left, double dx,
                          double level) {
  for (std::size_t j = u.size(); j-- > 0;) {
    if (u[j] >= level) {
      if (j + 1 >= u.size()) return x_left + dx * static_cast<double>(j);
      const double y0 = u[j], y1 = u[j + 1];
      double frac = (y0 > y1) ? (y0 - level) / (y0 - y1) : 0.0;
      frac = std::clamp(frac, 0.0, 1.0);
      return x_left + dx * (static_cast<double>(j) + frac);
    }
  }
  return kFrontNotReached;
}

// Rightmost crossing of ln(level) in log-renormalized values.
inline double log_front(const std::vector<double>& u, double x_left, double dx,
                        double log_offset, double level) {
  const double target = std::log(level) - log_offset;
  for (std::size_t j = u.size(); j-- > 0;) {
    if (u[j] > 0.0 && std::log(u[j]) >= target) {
      if (j + 1 >= u.size()) return x_left + dx * static_cast<double>(j);
      const double y0 = std::log(u[j]);
      const double y1 = u[j + 1] > 0.0 ? std::log(u[j + 1]) : y0 - 1e300;
      double frac = (y0 > y1) ? (y0 - target) / (y0 - y1) : 0.0;
      frac = std::clamp(frac, 0.0, 1.0);
      return x_left + dx * (static_cast<double>(j) + frac);
    }
  }
  return kFrontNotReached;
}

}  // namespace randfront::detail
