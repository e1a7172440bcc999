#pragma once

// Analytic kernels of the interacting system: the interaction mollifier and
// its rescalings, the smoothing bump used for density estimates, the heat
// kernel of the pair-difference process (generator Delta, no 1/2), its time
// integral K, and the auxiliary function r_eps solving
//
//     d/dt r + Delta r + theta_eps = 0 on [0, T),   r(T, .) = 0,
//
// which is evaluated as r_eps(t, .) = theta_eps * K(T - t, .).

#include "kpp/quadrature.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace kpp::kernels {

double norm(std::span<const double> x);

/// Surface area of the unit sphere in R^d.
double unit_sphere_area(int dim);
/// Volume of the unit ball in R^d.
double unit_ball_volume(int dim);

enum class MollifierShape {
  polynomial_bump,  ///< (1 - |x|^2/C0^2)^2 on the ball of radius C0
  triweight,        ///< (1 - |x|^2/C0^2)^3 on the ball of radius C0
};

MollifierShape parse_mollifier_shape(std::string_view name);

/// Radial, nonnegative, compactly supported theta with unit mass.
class Mollifier {
 public:
  explicit Mollifier(int dim, MollifierShape shape = MollifierShape::polynomial_bump,
                     double support_radius = 1.0);

  int dim() const { return dim_; }
  MollifierShape shape() const { return shape_; }
  double support_radius() const { return support_radius_; }
  /// c_d: the constant making the integral one, computed by quadrature.
  double normalization() const { return normalization_; }
  double peak() const { return normalization_; }

  /// theta as a function of |x|.
  double radial(double r) const;
  double operator()(std::span<const double> x) const { return radial(norm(x)); }

 private:
  int dim_;
  MollifierShape shape_;
  double support_radius_;
  double normalization_;
};

/// theta_eps(x) = eps^{-d} theta(x / eps).
class RescaledKernel {
 public:
  RescaledKernel(Mollifier base, double eps);

  const Mollifier& base() const { return base_; }
  double eps() const { return eps_; }
  int dim() const { return base_.dim(); }
  double support_radius() const { return base_.support_radius() * eps_; }
  /// theta_eps(0) = theta(0) eps^{-d}.
  double peak() const { return base_.peak() * scale_; }

  double radial(double r) const { return scale_ * base_.radial(r / eps_); }
  double operator()(std::span<const double> x) const { return radial(norm(x)); }

 private:
  Mollifier base_;
  double eps_;
  double scale_;
};

enum class BumpShape {
  cubic_bspline,  ///< tensor product of cubic B-splines with knot spacing 1/2
  triweight,      ///< radial (1 - |x|^2)^3, normalized
};

BumpShape parse_bump_shape(std::string_view name);

/// eta^delta(x) = delta^{-d} eta(x / delta), eta supported in [-1, 1]^d.
///
/// The default cubic B-spline bump reproduces unit mass exactly on any
/// uniform grid whose spacing divides delta/2, which is what lets smoothed
/// fields conserve the particle mass to rounding error.
class SmoothingBump {
 public:
  SmoothingBump(int dim, double delta, BumpShape shape = BumpShape::cubic_bspline);

  int dim() const { return dim_; }
  double delta() const { return delta_; }
  BumpShape shape() const { return shape_; }
  /// Every point of the support lies within this sup-norm distance of the centre.
  double support_radius() const { return delta_; }
  /// sup of the unscaled eta.
  double unit_peak() const;
  double operator()(std::span<const double> x) const;
  /// eta of the unscaled profile at a point of R^d.
  double unit(std::span<const double> y) const;

 private:
  int dim_;
  double delta_;
  BumpShape shape_;
  double normalization_ = 1.0;
};

/// p_t(x) = (4 pi t)^{-d/2} exp(-|x|^2 / (4t)).
double heat_kernel(double t, std::span<const double> x);
double heat_kernel_radial(double t, double r, int dim);

/// K(t, x) = int_0^t p_s(x) ds, through r = |x|^2 / (4s).
/// Rejects x = 0 for d >= 2 and t < 0.
double integrated_kernel(double t, std::span<const double> x, quad::Tolerance tol = {});
double integrated_kernel_radial(double t, double r, int dim, quad::Tolerance tol = {});
/// d/dr of K(t, .) along the radius; -Gamma(d/2, r^2/4t) / (2 pi^{d/2} r^{d-1}).
double integrated_kernel_radial_derivative(double t, double r, int dim, quad::Tolerance tol = {});

struct QuadratureSettings {
  int nodes_per_axis = 32;
  quad::Tolerance kernel_tolerance{1e-10, 1e-12};
  /// Geometric refinement levels toward the singular point of K.
  int grading_levels = 24;
};

/// r_eps(t, x) = (theta_eps * K(T - t, .))(x) on [0, T].
class AuxiliaryKernel {
 public:
  AuxiliaryKernel(RescaledKernel theta, double horizon, QuadratureSettings settings = {});

  const RescaledKernel& theta() const { return theta_; }
  double horizon() const { return horizon_; }
  int dim() const { return theta_.dim(); }

  double value(double t, std::span<const double> x) const;
  std::vector<double> gradient(double t, std::span<const double> x) const;

  /// r_eps along a ray, as a function of |x| (for d = 1, of the signed coordinate).
  double radial_value(double t, double a) const;
  /// d r_eps / d|x| (for d = 1, d/dx at the signed coordinate a).
  double radial_derivative(double t, double a) const;

 private:
  template <class RadialWeight>
  double convolve(double tau, double a, RadialWeight&& weight, bool odd) const;

  RescaledKernel theta_;
  double horizon_;
  QuadratureSettings settings_;
};

enum class EnvelopeBranch { value, gradient };

/// Structural envelope of r_eps (constants omitted):
/// exp(-|x|^2) for |x| >= 1 and (|x| v eps)^{2-d} (|log(|x| v eps)| when d = 2)
/// for |x| < 1; the gradient branch uses (|x| v eps)^{1-d}.
double bound_envelope(int dim, double eps, double x_norm, EnvelopeBranch which);

}  // namespace kpp::kernels
