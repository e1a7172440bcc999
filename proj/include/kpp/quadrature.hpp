#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpp::quad {

/// Raised when an adaptive integral does not reach its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached n-point rule; safe to call from several threads.
const GaussRule& gauss_legendre(int n);

/// Composite Gauss-Legendre over the panels [breaks[i], breaks[i+1]].
template <class F>
double integrate_panels(F&& f, std::span<const double> breaks, const GaussRule& rule) {
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double a = breaks[p];
    const double b = breaks[p + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (b + a);
    double panel = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      panel += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    total += half * panel;
  }
  return total;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
};

struct Tolerance {
  double absolute = 1e-10;
  double relative = 1e-12;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b]; b may be +infinity.
/// Throws QuadratureError when the error estimate stays above
/// max(tol.absolute, tol.relative * |value|).
AdaptiveResult adaptive(const std::function<double(double)>& f, double a, double b,
                        Tolerance tol = {});

/// Tensor-product composite Gauss-Legendre over the cube [-L, L]^d (d <= 3),
/// `panels` equal panels per axis with `nodes` points each.
double box_integral(const std::function<double(std::span<const double>)>& f, int dim, double half_width,
                    int panels, int nodes);

}  // namespace kpp::quad
