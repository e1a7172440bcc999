#include "kpp/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kpp::stats {

MeanSe mean_se(std::span<const double> xs) {
  MeanSe r;
  r.n = xs.size();
  if (xs.empty()) return r;
  double m = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double d = x - m;
    m += d / static_cast<double>(k);
    m2 += d * (x - m);
  }
  r.mean = m;
  if (r.n > 1) {
    r.variance = m2 / static_cast<double>(r.n - 1);
    r.se = std::sqrt(r.variance / static_cast<double>(r.n));
  }
  return r;
}

ChiSquareResult chi_square_discrete(std::span<const std::uint64_t> samples, const std::function<double(std::uint64_t)>& pmf,
                                    std::uint64_t offset, double min_expected, int fitted_parameters) {
  if (samples.empty()) throw std::invalid_argument("chi-square: no samples");
  const double n = static_cast<double>(samples.size());
  const std::uint64_t top = *std::max_element(samples.begin(), samples.end());
  if (top < offset) throw std::invalid_argument("chi-square: all samples below the support");
  std::vector<double> observed(top - offset + 1, 0.0);
  for (std::uint64_t s : samples) {
    if (s < offset) throw std::invalid_argument("chi-square: sample outside the support");
    observed[s - offset] += 1.0;
  }

  std::vector<double> obs_bins;
  std::vector<double> exp_bins;
  double cum_p = 0.0;
  double o = 0.0;
  double e = 0.0;
  for (std::uint64_t v = offset;; ++v) {
    const double p = pmf(v);
    const double tail_after = 1.0 - cum_p - p;
    o += v - offset < observed.size() ? observed[v - offset] : 0.0;
    e += n * p;
    cum_p += p;
    // Close a bin once it is large enough and the rest of the support can
    // still fill one more.
    if (e >= min_expected && n * tail_after >= min_expected) {
      obs_bins.push_back(o);
      exp_bins.push_back(e);
      o = 0.0;
      e = 0.0;
    } else if (n * tail_after < min_expected) {
      double rest = 0.0;
      for (std::uint64_t w = v + 1; w <= top; ++w) rest += observed[w - offset];
      obs_bins.push_back(o + rest);
      exp_bins.push_back(e + n * std::max(0.0, tail_after));
      break;
    }
  }

  ChiSquareResult r;
  r.bins = static_cast<int>(obs_bins.size());
  for (std::size_t i = 0; i < obs_bins.size(); ++i) {
    const double d = obs_bins[i] - exp_bins[i];
    r.statistic += d * d / exp_bins[i];
  }
  r.dof = r.bins - 1 - fitted_parameters;
  if (r.dof < 1) throw std::invalid_argument("chi-square: too few bins");
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("KS: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_p_value(double statistic, double effective_n) {
  const double sn = std::sqrt(effective_n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_critical_value(double alpha, std::size_t n) {
  double c = 0.0;
  if (alpha == 0.1) {
    c = 1.2239;
  } else if (alpha == 0.05) {
    c = 1.3581;
  } else if (alpha == 0.01) {
    c = 1.6276;
  } else {
    throw std::invalid_argument("KS critical value: unsupported alpha");
  }
  return c / std::sqrt(static_cast<double>(n));
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least squares: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("least squares: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace kpp::stats
