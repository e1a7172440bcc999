#pragma once

// Small statistics toolkit for the Monte Carlo checks.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace kpp::stats {

struct MeanSe {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased sample variance
  double se = 0.0;        ///< standard error of the mean
  std::size_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  int bins = 0;
};

/// Pearson test of integer-valued samples against `pmf` on {offset, offset+1, ...}.
/// Adjacent values are pooled left to right until every bin expects at
/// least `min_expected`; the remaining upper tail forms the last bin.
ChiSquareResult chi_square_discrete(std::span<const std::uint64_t> samples, const std::function<double(std::uint64_t)>& pmf,
                                    std::uint64_t offset = 0, double min_expected = 5.0, int fitted_parameters = 0);

/// sup_x |F_n(x) - F(x)|.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
/// Two-sample sup distance between empirical CDFs.
double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b);
/// Asymptotic Kolmogorov tail with Stephens' finite-n correction; for two
/// samples pass the effective size n*m/(n+m).
double ks_p_value(double statistic, double effective_n);
/// c(alpha)/sqrt(n) for the one-sample test; alpha in {0.1, 0.05, 0.01}.
double ks_critical_value(double alpha, std::size_t n);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace kpp::stats
