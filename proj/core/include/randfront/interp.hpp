#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace randfront {

// Fritsch-Carlson monotone cubic (PCHIP). Preserves the monotonicity of the
// data, which keeps root-finding on interpolated L and L' well behaved.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw std::invalid_argument("MonotoneCubic: need two or more nodes");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw std::invalid_argument("MonotoneCubic: abscissae must increase");
    m_.assign(n, 0.0);
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (d[i - 1] * d[i] <= 0.0) {
        m_[i] = 0.0;
      } else {
        const double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
        const double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
        m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (d[i] == 0.0) {
        m_[i] = m_[i + 1] = 0.0;
        continue;
      }
      const double a = m_[i] / d[i];
      const double b = m_[i + 1] / d[i];
      const double s = a * a + b * b;
      if (s > 9.0) {
        const double tau = 3.0 / std::sqrt(s);
        m_[i] = tau * a * d[i];
        m_[i + 1] = tau * b * d[i];
      }
    }
  }

  double operator()(double xq) const {
    const std::size_t n = x_.size();
    if (xq <= x_.front()) return extrapolate(0, xq);
    if (xq >= x_.back()) return extrapolate(n - 2, xq);
    const auto it = std::upper_bound(x_.begin(), x_.end(), xq);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double t = (xq - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
  }

  double min_x() const { return x_.front(); }
  double max_x() const { return x_.back(); }

 private:
  double extrapolate(std::size_t i, double xq) const {
    // linear continuation with the boundary node slope
    const std::size_t j = (i == 0) ? 0 : x_.size() - 1;
    return y_[j] + m_[j] * (xq - x_[j]);
  }

  std::vector<double> x_, y_, m_;
};

}  // namespace randfront
