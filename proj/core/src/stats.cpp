#include "randfront/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace randfront {

MeanSe mean_se(std::span<const double> values) {
  MeanSe out;
  out.n = values.size();
  if (out.n == 0) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(out.n);
  if (out.n < 2) return out;
  double ss = 0.0;
  for (double v : values) {
    const double d = v - out.mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(out.n - 1);
  out.se = std::sqrt(var / static_cast<double>(out.n));
  return out;
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const MeanSe m = mean_se(values);
  double ss = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    ss += d * d;
  }
  return ss / static_cast<double>(values.size() - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty sample");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("percentile: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("pearson_correlation: need two equal samples");
  const MeanSe ma = mean_se(a);
  const MeanSe mb = mean_se(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma.mean;
    const double db = b[i] - mb.mean;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

Proportion wilson_proportion(std::size_t successes, std::size_t n) {
  Proportion out;
  out.successes = successes;
  out.n = n;
  if (n == 0) return out;
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(successes) / nn;
  out.p = phat;
  const double z = 1.0;  // one-sigma interval
  const double denom = 1.0 + z * z / nn;
  const double half =
      (z / denom) * std::sqrt(phat * (1.0 - phat) / nn + z * z / (4.0 * nn * nn));
  out.se = half;
  return out;
}

namespace {

// Asymptotic Kolmogorov distribution Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 l^2}.
double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Marsaglia & Marsaglia (2004) polynomial evaluation of the asymptotic
// Anderson-Darling distribution, case of a fully specified null.
double ad_inf_cdf(double z) {
  if (z < 1e-8) return 0.0;
  if (z < 2.0) {
    return std::exp(-1.2337141 / z) / std::sqrt(z) *
           (2.00012 +
            (0.247105 -
             (0.0649821 - (0.0347962 - (0.0116720 - 0.00168691 * z) * z) * z) * z) *
                z);
  }
  return std::exp(
      -std::exp(1.0776 -
                (2.30695 - (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) * z) *
                    z));
}

}  // namespace

KsResult ks_test_normal(std::vector<double> sample) {
  KsResult out;
  const std::size_t n = sample.size();
  if (n == 0) return out;
  std::sort(sample.begin(), sample.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf = normal_cdf(sample[i]);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n) - cdf;
    const double lo = cdf - static_cast<double>(i) / static_cast<double>(n);
    d = std::max({d, hi, lo});
  }
  out.d = d;
  const double sn = std::sqrt(static_cast<double>(n));
  out.p = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
  return out;
}

AdResult anderson_darling_normal(std::vector<double> sample) {
  AdResult out;
  const std::size_t n = sample.size();
  if (n == 0) return out;
  std::sort(sample.begin(), sample.end());
  const double nn = static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = normal_cdf(sample[i]);
    f = std::clamp(f, 1e-15, 1.0 - 1e-15);
    const double g = normal_cdf(sample[n - 1 - i]);
    const double gc = std::clamp(1.0 - g, 1e-15, 1.0);
    acc += (2.0 * static_cast<double>(i) + 1.0) * (std::log(f) + std::log(gc));
  }
  out.a2 = -nn - acc / nn;
  out.p = 1.0 - ad_inf_cdf(out.a2);
  return out;
}

LinearFit ols(const std::vector<std::vector<double>>& columns,
              std::span<const double> y) {
  const std::size_t p = columns.size();
  const std::size_t n = y.size();
  if (p == 0 || n < p) throw std::invalid_argument("ols: underdetermined system");
  for (const auto& col : columns)
    if (col.size() != n) throw std::invalid_argument("ols: ragged design matrix");

  // Normal equations; p is tiny (2 or 3) so a dense Gauss-Jordan inverse is fine.
  std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += columns[a][i] * columns[b][i];
      xtx[a * p + b] = s;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += columns[a][i] * y[i];
    xty[a] = s;
  }
  std::vector<double> inv(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) inv[i * p + i] = 1.0;
  std::vector<double> m = xtx;
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r)
      if (std::abs(m[r * p + col]) > std::abs(m[piv * p + col])) piv = r;
    if (std::abs(m[piv * p + col]) < 1e-300)
      throw std::runtime_error("ols: singular design matrix");
    if (piv != col) {
      for (std::size_t c = 0; c < p; ++c) {
        std::swap(m[piv * p + c], m[col * p + c]);
        std::swap(inv[piv * p + c], inv[col * p + c]);
      }
    }
    const double diag = m[col * p + col];
    for (std::size_t c = 0; c < p; ++c) {
      m[col * p + c] /= diag;
      inv[col * p + c] /= diag;
    }
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = m[r * p + col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < p; ++c) {
        m[r * p + c] -= f * m[col * p + c];
        inv[r * p + c] -= f * inv[col * p + c];
      }
    }
  }

  LinearFit fit;
  fit.coef.assign(p, 0.0);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) fit.coef[a] += inv[a * p + b] * xty[b];

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = 0.0;
    for (std::size_t a = 0; a < p; ++a) pred += fit.coef[a] * columns[a][i];
    const double r = y[i] - pred;
    rss += r * r;
  }
  const double dof = static_cast<double>(n > p ? n - p : 1);
  const double s2 = rss / dof;
  fit.residual_sd = std::sqrt(s2);
  fit.se.assign(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) fit.se[a] = std::sqrt(s2 * inv[a * p + a]);
  return fit;
}

LinearFit fit_log_drift(std::span<const double> t, std::span<const double> y,
                        bool with_linear_term) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_log_drift: size mismatch");
  std::vector<std::vector<double>> cols;
  cols.emplace_back(t.size(), 1.0);
  std::vector<double> lc(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) lc[i] = std::log(t[i]);
  cols.push_back(std::move(lc));
  if (with_linear_term) cols.emplace_back(t.begin(), t.end());
  return ols(cols, y);
}

}  // namespace randfront
