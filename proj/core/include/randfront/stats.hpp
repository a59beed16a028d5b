#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace randfront {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> values);
double sample_variance(std::span<const double> values);  // unbiased

// Standard normal CDF.
double normal_cdf(double x);

// Linear-interpolated order statistic, q in [0,1].
double percentile(std::vector<double> values, double q);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

// Wilson score interval for a binomial proportion; se is the z=1 half-width,
// which stays meaningful for counts of 0 or n.
struct Proportion {
  double p = 0.0;
  double se = 0.0;
  std::size_t successes = 0;
  std::size_t n = 0;
};
Proportion wilson_proportion(std::size_t successes, std::size_t n);

// Two-sided Kolmogorov-Smirnov test against N(0,1) (fully specified null);
// p-value from the asymptotic Kolmogorov distribution with the standard
// small-sample correction.
struct KsResult {
  double d = 0.0;
  double p = 0.0;
};
KsResult ks_test_normal(std::vector<double> sample);

// Anderson-Darling A^2 against N(0,1), case of fully specified parameters.
// The p-value uses the Marsaglia & Marsaglia approximation; diagnostic only.
struct AdResult {
  double a2 = 0.0;
  double p = 0.0;
};
AdResult anderson_darling_normal(std::vector<double> sample);

// Ordinary least squares for y ~ X * coef; X given column-wise. Coefficient
// standard errors come from the residual variance and (X^T X)^{-1}.
struct LinearFit {
  std::vector<double> coef;
  std::vector<double> se;
  double residual_sd = 0.0;
};
LinearFit ols(const std::vector<std::vector<double>>& columns,
              std::span<const double> y);

// Convenience: y ~ a + b*ln t (+ c*t when with_linear_term).
LinearFit fit_log_drift(std::span<const double> t, std::span<const double> y,
                        bool with_linear_term);

}  // namespace randfront
