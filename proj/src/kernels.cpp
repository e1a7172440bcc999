#include "kpp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kpp::kernels {

using std::numbers::pi;

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double unit_sphere_area(int dim) {
  return 2.0 * std::pow(pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

double unit_ball_volume(int dim) {
  return std::pow(pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

namespace {

void check_dim(int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be a positive integer");
}

int profile_power(MollifierShape shape) {
  return shape == MollifierShape::polynomial_bump ? 2 : 3;
}

// int_0^1 (1 - s^2)^p s^{d-1} ds; the integrand is a polynomial so a
// modest Gauss rule is exact.
double radial_moment(int power, int dim) {
  const auto& rule = quad::gauss_legendre(16);
  const double breaks[] = {0.0, 1.0};
  return quad::integrate_panels(
      [&](double s) { return std::pow(1.0 - s * s, power) * std::pow(s, dim - 1); }, breaks, rule);
}

double cubic_bspline(double u) {
  u = std::abs(u);
  if (u < 1.0) return 2.0 / 3.0 - u * u + 0.5 * u * u * u;
  if (u < 2.0) {
    const double w = 2.0 - u;
    return w * w * w / 6.0;
  }
  return 0.0;
}

}  // namespace

MollifierShape parse_mollifier_shape(std::string_view name) {
  if (name == "polynomial-bump") return MollifierShape::polynomial_bump;
  if (name == "triweight") return MollifierShape::triweight;
  throw std::invalid_argument("unknown mollifier shape: " + std::string(name));
}

Mollifier::Mollifier(int dim, MollifierShape shape, double support_radius)
    : dim_(dim), shape_(shape), support_radius_(support_radius) {
  check_dim(dim);
  if (!(support_radius > 0.0)) throw std::invalid_argument("mollifier support radius must be > 0");
  const double mass = unit_sphere_area(dim) * std::pow(support_radius, dim) *
                      radial_moment(profile_power(shape), dim);
  normalization_ = 1.0 / mass;
}

double Mollifier::radial(double r) const {
  const double s = r / support_radius_;
  if (s >= 1.0) return 0.0;
  const double w = 1.0 - s * s;
  return normalization_ * (shape_ == MollifierShape::polynomial_bump ? w * w : w * w * w);
}

RescaledKernel::RescaledKernel(Mollifier base, double eps)
    : base_(std::move(base)), eps_(eps), scale_(0.0) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("interaction scale eps must be positive");
  }
  scale_ = std::pow(eps, -base_.dim());
}

BumpShape parse_bump_shape(std::string_view name) {
  if (name == "cubic-bspline") return BumpShape::cubic_bspline;
  if (name == "triweight") return BumpShape::triweight;
  throw std::invalid_argument("unknown smoothing bump shape: " + std::string(name));
}

SmoothingBump::SmoothingBump(int dim, double delta, BumpShape shape)
    : dim_(dim), delta_(delta), shape_(shape) {
  check_dim(dim);
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("smoothing width delta must be positive");
  }
  if (shape == BumpShape::triweight) {
    normalization_ = 1.0 / (unit_sphere_area(dim) * radial_moment(3, dim));
  }
}

double SmoothingBump::unit_peak() const {
  if (shape_ == BumpShape::cubic_bspline) return std::pow(4.0 / 3.0, dim_);
  return normalization_;
}

double SmoothingBump::unit(std::span<const double> y) const {
  if (shape_ == BumpShape::cubic_bspline) {
    double v = 1.0;
    for (double c : y) {
      v *= 2.0 * cubic_bspline(2.0 * c);
      if (v == 0.0) return 0.0;
    }
    return v;
  }
  double s2 = 0.0;
  for (double c : y) s2 += c * c;
  if (s2 >= 1.0) return 0.0;
  const double w = 1.0 - s2;
  return normalization_ * w * w * w;
}

double SmoothingBump::operator()(std::span<const double> x) const {
  double y[8];
  if (x.size() > 8) throw std::invalid_argument("smoothing bump supports d <= 8");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / delta_;
  return std::pow(delta_, -dim_) * unit({y, x.size()});
}

double heat_kernel_radial(double t, double r, int dim) {
  if (!(t > 0.0)) throw std::invalid_argument("heat kernel needs t > 0");
  check_dim(dim);
  return std::pow(4.0 * pi * t, -0.5 * dim) * std::exp(-r * r / (4.0 * t));
}

double heat_kernel(double t, std::span<const double> x) {
  return heat_kernel_radial(t, norm(x), static_cast<int>(x.size()));
}

namespace {

// int_z^inf s^{nu-1} e^{-s} ds for z > 0, split at z + 1. The near piece
// uses s = z e^v, which keeps the integrand smooth when nu <= 0 and z is tiny.
double upper_gamma_integral(double nu, double z, quad::Tolerance tol) {
  if (z > 745.0) return 0.0;
  const double split = z + 1.0;
  const auto near = quad::adaptive(
      [&](double v) {
        const double s = z * std::exp(v);
        return std::pow(s, nu) * std::exp(-s);
      },
      0.0, std::log(split / z), tol);
  const auto far = quad::adaptive(
      [&](double s) { return std::pow(s, nu - 1.0) * std::exp(-s); }, split,
      std::numeric_limits<double>::infinity(), tol);
  return near.value + far.value;
}

quad::Tolerance scaled(quad::Tolerance tol, double factor) {
  return {tol.absolute / factor, tol.relative};
}

}  // namespace

double integrated_kernel_radial(double t, double r, int dim, quad::Tolerance tol) {
  check_dim(dim);
  if (t < 0.0) throw std::invalid_argument("integrated kernel needs t >= 0");
  if (r < 0.0) throw std::invalid_argument("radius must be nonnegative");
  if (t == 0.0) return 0.0;
  if (r == 0.0) {
    if (dim == 1) return std::sqrt(t / pi);
    throw std::invalid_argument("integrated kernel is singular at x = 0 for d >= 2");
  }
  const double prefactor = 1.0 / (4.0 * std::pow(pi, 0.5 * dim) * std::pow(r, dim - 2));
  const double z = r * r / (4.0 * t);
  return prefactor * upper_gamma_integral(0.5 * (dim - 2), z, scaled(tol, prefactor));
}

double integrated_kernel(double t, std::span<const double> x, quad::Tolerance tol) {
  return integrated_kernel_radial(t, norm(x), static_cast<int>(x.size()), tol);
}

double integrated_kernel_radial_derivative(double t, double r, int dim, quad::Tolerance tol) {
  check_dim(dim);
  if (t < 0.0) throw std::invalid_argument("integrated kernel needs t >= 0");
  if (!(r > 0.0)) throw std::invalid_argument("radial derivative needs r > 0");
  if (t == 0.0) return 0.0;
  const double prefactor = 1.0 / (2.0 * std::pow(pi, 0.5 * dim) * std::pow(r, dim - 1));
  const double z = r * r / (4.0 * t);
  return -prefactor * upper_gamma_integral(0.5 * dim, z, scaled(tol, prefactor));
}

AuxiliaryKernel::AuxiliaryKernel(RescaledKernel theta, double horizon, QuadratureSettings settings)
    : theta_(std::move(theta)), horizon_(horizon), settings_(settings) {
  if (!(horizon > 0.0)) throw std::invalid_argument("auxiliary kernel horizon must be > 0");
  if (dim() > 3) throw std::invalid_argument("auxiliary kernel is implemented for d <= 3");
  if (settings_.nodes_per_axis < 2) throw std::invalid_argument("need at least 2 nodes per axis");
}

namespace {

void add_if_inside(std::vector<double>& breaks, double p, double lo, double hi) {
  if (p > lo && p < hi) breaks.push_back(p);
}

// Panel boundaries doubling away from `centre` at the diffusive scale, so
// K(tau, .) is resolved when sqrt(tau) is much smaller than the panel.
void add_diffusive_grading(std::vector<double>& breaks, double centre, double scale, double lo,
                           double hi) {
  if (!(scale > 0.0)) return;
  for (double p = scale; p < hi - lo; p *= 2.0) {
    add_if_inside(breaks, centre + p, lo, hi);
    add_if_inside(breaks, centre - p, lo, hi);
  }
}

}  // namespace

// Computes int theta_eps(x - y) W(y) dy with x = a e_1, where W(y) = w(|y|)
// (odd = false) or w(|y|) * (y . e_1)/|y| (odd = true).
template <class RadialWeight>
double AuxiliaryKernel::convolve(double tau, double a, RadialWeight&& weight, bool odd) const {
  const auto& rule = quad::gauss_legendre(settings_.nodes_per_axis);
  const double R = theta_.support_radius();
  const double diffusive = std::sqrt(tau);
  const int d = dim();

  if (d == 1) {
    const double lo = a - R;
    const double hi = a + R;
    std::vector<double> breaks{lo, hi};
    add_if_inside(breaks, 0.0, lo, hi);
    add_diffusive_grading(breaks, 0.0, diffusive, lo, hi);
    std::sort(breaks.begin(), breaks.end());
    return quad::integrate_panels(
        [&](double y) {
          const double w = weight(std::abs(y));
          const double sign = odd ? (y > 0.0 ? 1.0 : (y < 0.0 ? -1.0 : 0.0)) : 1.0;
          return theta_.radial(std::abs(a - y)) * sign * w;
        },
        breaks, rule);
  }

  if (a == 0.0) {
    if (odd) return 0.0;
    std::vector<double> breaks{0.0, R};
    add_diffusive_grading(breaks, 0.0, diffusive, 0.0, R);
    std::sort(breaks.begin(), breaks.end());
    if (d == 2) {
      const double first = breaks[1];
      for (int k = 1; k <= settings_.grading_levels; ++k) breaks.push_back(first * std::ldexp(1.0, -k));
      std::sort(breaks.begin(), breaks.end());
    }
    const double area = unit_sphere_area(d);
    return quad::integrate_panels(
        [&](double rho) { return area * std::pow(rho, d - 1) * theta_.radial(rho) * weight(rho); },
        breaks, rule);
  }

  const double lo = std::max(0.0, a - R);
  const double hi = a + R;
  std::vector<double> breaks{lo, hi};
  add_if_inside(breaks, std::abs(R - a), lo, hi);
  add_diffusive_grading(breaks, 0.0, diffusive, lo, hi);
  std::sort(breaks.begin(), breaks.end());
  if (d == 2 && lo == 0.0) {
    const double first = breaks[1];
    for (int k = 1; k <= settings_.grading_levels; ++k) breaks.push_back(first * std::ldexp(1.0, -k));
    std::sort(breaks.begin(), breaks.end());
  }

  // Angular integral of theta_eps(|rho w - a e1|) [times cos] over the sphere.
  auto angular = [&](double rho) {
    const double c_lo = std::clamp((rho * rho + a * a - R * R) / (2.0 * rho * a), -1.0, 1.0);
    if (c_lo >= 1.0) return 0.0;
    auto integrand = [&](double c) {
      const double s2 = std::max(0.0, rho * rho + a * a - 2.0 * rho * a * c);
      return theta_.radial(std::sqrt(s2)) * (odd ? c : 1.0);
    };
    if (d == 3) {
      const double b[] = {c_lo, 1.0};
      return 2.0 * pi * quad::integrate_panels(integrand, b, rule);
    }
    const double b[] = {0.0, std::acos(c_lo)};
    return 2.0 * quad::integrate_panels([&](double alpha) { return integrand(std::cos(alpha)); }, b,
                                        rule);
  };

  return quad::integrate_panels(
      [&](double rho) { return std::pow(rho, d - 1) * weight(rho) * angular(rho); }, breaks, rule);
}

double AuxiliaryKernel::radial_value(double t, double a) const {
  if (t < 0.0 || t > horizon_) throw std::invalid_argument("r_eps: t must lie in [0, T]");
  const double tau = horizon_ - t;
  if (tau == 0.0) return 0.0;
  const int d = dim();
  const auto tol = settings_.kernel_tolerance;
  return convolve(
      tau, a, [&](double rho) { return integrated_kernel_radial(tau, rho, d, tol); }, false);
}

double AuxiliaryKernel::radial_derivative(double t, double a) const {
  if (t < 0.0 || t > horizon_) throw std::invalid_argument("r_eps: t must lie in [0, T]");
  const double tau = horizon_ - t;
  if (tau == 0.0) return 0.0;
  const int d = dim();
  const auto tol = settings_.kernel_tolerance;
  return convolve(
      tau, a,
      [&](double rho) {
        if (rho == 0.0) return 0.0;
        return integrated_kernel_radial_derivative(tau, rho, d, tol);
      },
      true);
}

double AuxiliaryKernel::value(double t, std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw std::invalid_argument("r_eps: dimension mismatch");
  return radial_value(t, dim() == 1 ? x[0] : norm(x));
}

std::vector<double> AuxiliaryKernel::gradient(double t, std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw std::invalid_argument("r_eps: dimension mismatch");
  if (dim() == 1) return {radial_derivative(t, x[0])};
  const double a = norm(x);
  std::vector<double> g(x.size(), 0.0);
  if (a == 0.0) return g;
  const double dr = radial_derivative(t, a);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = dr * x[i] / a;
  return g;
}

double bound_envelope(int dim, double eps, double x_norm, EnvelopeBranch which) {
  check_dim(dim);
  if (!(eps > 0.0) || eps > 1.0) throw std::invalid_argument("envelope needs eps in (0, 1]");
  if (x_norm >= 1.0) return std::exp(-x_norm * x_norm);
  const double m = std::max(x_norm, eps);
  if (which == EnvelopeBranch::gradient) return std::pow(m, 1 - dim);
  if (dim == 2) return std::abs(std::log(m));
  return std::pow(m, 2 - dim);
}

}  // namespace kpp::kernels
