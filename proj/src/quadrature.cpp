#include "kpp/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace kpp::quad {

namespace {

GaussRule build_rule(int n) {
  GaussRule rule;
  // legendre_p_zeros returns the nonnegative zeros in increasing order.
  const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);
  auto weight = [n](double x) {
    const double dp = boost::math::legendre_p_prime<double>(n, x);
    return 2.0 / ((1.0 - x * x) * dp * dp);
  };
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
    if (*it == 0.0) continue;
    rule.nodes.push_back(-*it);
    rule.weights.push_back(weight(*it));
  }
  for (double z : zeros) {
    rule.nodes.push_back(z);
    rule.weights.push_back(weight(z));
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(build_rule(n));
  return *slot;
}

AdaptiveResult adaptive(const std::function<double(double)>& f, double a, double b,
                        Tolerance tol) {
  if (a == b) return {};
  double error = 0.0;
  double l1 = 0.0;
  constexpr unsigned max_depth = 30;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, max_depth, tol.relative, &error, &l1);
  if (!std::isfinite(value) || error > std::max(tol.absolute, tol.relative * std::abs(value))) {
    std::ostringstream msg;
    msg << "adaptive quadrature on [" << a << ", " << b << "] did not converge: value " << value
        << ", error estimate " << error;
    throw QuadratureError(msg.str());
  }
  return {value, error};
}

double box_integral(const std::function<double(std::span<const double>)>& f, int dim, double half_width,
                    int panels, int nodes) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("box integral: dimension must be 1, 2 or 3");
  if (!(half_width > 0.0) || panels < 1) throw std::invalid_argument("box integral: empty box");
  const GaussRule& rule = gauss_legendre(nodes);
  const double w = 2.0 * half_width / panels;
  std::vector<double> xs;
  std::vector<double> ws;
  for (int p = 0; p < panels; ++p) {
    const double lo = -half_width + p * w;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      xs.push_back(lo + 0.5 * w * (rule.nodes[q] + 1.0));
      ws.push_back(0.5 * w * rule.weights[q]);
    }
  }
  const std::size_t k = xs.size();
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= k;
  double x[3] = {0.0, 0.0, 0.0};
  double sum = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double wt = 1.0;
    for (int a = 0; a < dim; ++a) {
      const std::size_t q = rem % k;
      rem /= k;
      x[a] = xs[q];
      wt *= ws[q];
    }
    sum += wt * f(std::span<const double>(x, static_cast<std::size_t>(dim)));
  }
  return sum;
}

}  // namespace kpp::quad
