#include "kpp/kernels.hpp"
#include "kpp/quadrature.hpp"

#include "doctest.h"

#include <boost/math/special_functions/expint.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

using namespace kpp;
using kernels::EnvelopeBranch;
using kernels::MollifierShape;

namespace {

constexpr double kPi = std::numbers::pi;

// Closed forms of int_0^t (4 pi s)^{-d/2} exp(-r^2 / 4s) ds.
double k_closed_form(double t, double r, int d) {
  if (t == 0.0) return 0.0;
  const double z = r / (2.0 * std::sqrt(t));
  switch (d) {
    case 1:
      return std::sqrt(t / kPi) * std::exp(-z * z) - 0.5 * r * std::erfc(z);
    case 2:
      return boost::math::expint(1, z * z) / (4.0 * kPi);
    default:
      return std::erfc(z) / (4.0 * kPi * r);
  }
}

// Same integral by brute quadrature in log time.
double k_by_time_quadrature(double t, double r, int d) {
  auto integrand = [&](double u) {
    const double s = std::exp(u);
    return s * std::pow(4.0 * kPi * s, -0.5 * d) * std::exp(-r * r / (4.0 * s));
  };
  return quad::adaptive(integrand, std::log(t) - 80.0, std::log(t), {1e-14, 1e-11}).value;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("mollifier constants match the closed-form masses") {
  CHECK(kernels::Mollifier(1).peak() == doctest::Approx(0.9375).epsilon(1e-12));
  CHECK(kernels::Mollifier(2).peak() == doctest::Approx(3.0 / kPi).epsilon(1e-12));
  CHECK(kernels::Mollifier(3).peak() == doctest::Approx(105.0 / (32.0 * kPi)).epsilon(1e-12));
  CHECK(kernels::Mollifier(1, MollifierShape::triweight).peak() == doctest::Approx(35.0 / 32.0).epsilon(1e-12));
  // Support radius C0 = 2 spreads the same mass over twice the width.
  CHECK(kernels::Mollifier(1, MollifierShape::polynomial_bump, 2.0).peak() ==
        doctest::Approx(0.9375 / 2.0).epsilon(1e-12));
}

TEST_CASE("rescaled kernel has unit mass for every eps and dimension") {
  for (int d = 1; d <= 3; ++d) {
    for (double eps : {0.01, 0.05, 0.2, 1.0, 3.0}) {
      for (auto shape : {MollifierShape::polynomial_bump, MollifierShape::triweight}) {
        const kernels::RescaledKernel k(kernels::Mollifier(d, shape), eps);
        auto radial_mass = [&](double r) { return kernels::unit_sphere_area(d) * std::pow(r, d - 1) * k.radial(r); };
        const double mass = quad::adaptive(radial_mass, 0.0, k.support_radius(), {1e-13, 1e-12}).value;
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("rescaled kernel peak, support and grid mass") {
  const kernels::RescaledKernel k(kernels::Mollifier(1), 0.1);
  CHECK(k.peak() == doctest::Approx(9.375).epsilon(1e-12));
  const std::array<double, 1> outside{0.1000001};
  CHECK(k(outside) == 0.0);
  CHECK(k.radial(0.2) == 0.0);

  const kernels::RescaledKernel k2(kernels::Mollifier(2), 0.05);
  const double h = 0.001;
  double sum = 0.0;
  for (int i = -60; i <= 60; ++i) {
    for (int j = -60; j <= 60; ++j) {
      const std::array<double, 2> x{i * h, j * h};
      sum += k2(x) * h * h;
    }
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("smoothing bump has unit mass and is supported in the cube") {
  for (int d = 1; d <= 3; ++d) {
    for (auto shape : {kernels::BumpShape::cubic_bspline, kernels::BumpShape::triweight}) {
      const kernels::SmoothingBump eta(d, 0.2, shape);
      const double mass = quad::box_integral([&](std::span<const double> x) { return eta(x); }, d, 0.2, 8, 12);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
      std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
      CHECK(eta.unit(zero) == doctest::Approx(eta.unit_peak()));
      std::vector<double> corner(static_cast<std::size_t>(d), 0.2);
      CHECK(eta(corner) == 0.0);
    }
  }
}

TEST_CASE("cubic B-spline bump sums to one on grids with spacing delta/4") {
  const double delta = 0.1;
  const kernels::SmoothingBump eta(1, delta);
  for (double shift : {0.0, 0.0123, 0.05}) {
    double sum = 0.0;
    for (int i = -8; i <= 8; ++i) {
      const std::array<double, 1> x{i * delta / 4 - shift};
      sum += eta(x) * delta / 4;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("heat kernel values, symmetry and mass") {
  const std::array<double, 1> origin{0.0};
  CHECK(kernels::heat_kernel(1.0, origin) == doctest::Approx(1.0 / std::sqrt(4.0 * kPi)).epsilon(1e-14));
  const std::array<double, 2> a{0.3, -0.4};
  const std::array<double, 2> b{-0.5, 0.0};
  CHECK(kernels::heat_kernel(0.7, a) == doctest::Approx(kernels::heat_kernel(0.7, b)).epsilon(1e-14));
  for (int d = 1; d <= 3; ++d) {
    auto f = [&](double r) {
      return kernels::unit_sphere_area(d) * std::pow(r, d - 1) * kernels::heat_kernel_radial(0.5, r, d);
    };
    CHECK(quad::adaptive(f, 0.0, 30.0).value == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("integrated kernel against closed forms and time quadrature") {
  CHECK(kernels::integrated_kernel_radial(1.0, 0.0, 1) == doctest::Approx(1.0 / std::sqrt(kPi)).epsilon(1e-10));
  CHECK(kernels::integrated_kernel_radial(0.0, 0.3, 2) == 0.0);
  const double far = kernels::integrated_kernel_radial(1e6, 1.0, 3);
  CHECK(far == doctest::Approx(1.0 / (4.0 * kPi)).epsilon(1e-3));

  for (int d = 1; d <= 3; ++d) {
    for (double t : {1e-3, 0.1, 1.0, 7.0}) {
      for (double r : {0.001, 0.05, 0.5, 2.0}) {
        CAPTURE(d);
        CAPTURE(t);
        CAPTURE(r);
        const double k = kernels::integrated_kernel_radial(t, r, d);
        CHECK(k == doctest::Approx(k_closed_form(t, r, d)).epsilon(1e-9).scale(1e-300));
        CHECK(k == doctest::Approx(k_by_time_quadrature(t, r, d)).epsilon(1e-8).scale(1e-300));
      }
    }
  }
}

TEST_CASE("integrated kernel rejects the origin for d >= 2 and negative times") {
  const std::array<double, 2> zero{0.0, 0.0};
  CHECK_THROWS(kernels::integrated_kernel(1.0, zero));
  CHECK_THROWS(kernels::integrated_kernel_radial(-1.0, 0.5, 1));
}

TEST_CASE("integrated kernel radial derivative matches a centred difference") {
  for (int d = 1; d <= 3; ++d) {
    for (double r : {0.05, 0.4, 1.5}) {
      const double h = 1e-5 * r;
      const double fd = (k_closed_form(0.8, r + h, d) - k_closed_form(0.8, r - h, d)) / (2 * h);
      CHECK(kernels::integrated_kernel_radial_derivative(0.8, r, d) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("auxiliary function equals the convolution of theta_eps with K, d = 1") {
  const double eps = 0.1;
  const kernels::RescaledKernel theta(kernels::Mollifier(1), eps);
  const kernels::AuxiliaryKernel r(theta, 1.0);
  for (double t : {0.0, 0.5, 0.9}) {
    for (double x : {0.0, 0.03, -0.07, 0.1, 0.25, -1.2}) {
      auto f = [&](double y) { return theta.radial(std::abs(y)) * k_closed_form(1.0 - t, std::abs(x - y), 1); };
      const double breaks[] = {-eps, std::min(std::max(x, -eps), eps), eps};
      const double oracle = quad::adaptive(f, breaks[0], breaks[1], {1e-14, 1e-12}).value +
                            quad::adaptive(f, breaks[1], breaks[2], {1e-14, 1e-12}).value;
      const std::array<double, 1> xs{x};
      CHECK(r.value(t, xs) == doctest::Approx(oracle).epsilon(1e-8));
    }
  }
}

TEST_CASE("auxiliary function in d = 3 away from the support") {
  const kernels::RescaledKernel theta(kernels::Mollifier(3), 0.1);
  const kernels::AuxiliaryKernel r(theta, 1.0);
  const std::array<double, 3> x{0.3, 0.2, -0.25};
  auto f = [&](std::span<const double> y) {
    const double dx = std::hypot(x[0] - y[0], x[1] - y[1], x[2] - y[2]);
    return theta(y) * k_closed_form(0.6, dx, 3);
  };
  const double oracle = quad::box_integral(f, 3, 0.1, 4, 16);
  CHECK(r.value(0.4, x) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("auxiliary function: terminal value, sign and monotonicity") {
  for (int d = 1; d <= 3; ++d) {
    const kernels::AuxiliaryKernel r(kernels::RescaledKernel(kernels::Mollifier(d), 0.1), 1.0);
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    x[0] = 0.05;
    CHECK(r.value(1.0, x) == 0.0);
    double previous = std::numeric_limits<double>::infinity();
    for (double t : {0.0, 0.25, 0.5, 0.75, 0.99}) {
      const double v = r.value(t, x);
      CHECK(v >= 0.0);
      CHECK(v <= previous);
      previous = v;
    }
    previous = std::numeric_limits<double>::infinity();
    for (double a : {0.0, 0.05, 0.1, 0.3, 1.0, 2.5}) {
      const double v = r.radial_value(0.3, a);
      CHECK(v <= previous * (1 + 1e-12));
      previous = v;
    }
  }
}

TEST_CASE("auxiliary function is radial") {
  const kernels::AuxiliaryKernel r(kernels::RescaledKernel(kernels::Mollifier(2), 0.1), 1.0);
  const std::array<double, 2> a{0.3, 0.4};
  const std::array<double, 2> b{-0.5, 0.0};
  const std::array<double, 2> c{0.0, -0.5};
  CHECK(r.value(0.2, a) == doctest::Approx(r.value(0.2, b)).epsilon(1e-10));
  CHECK(r.value(0.2, a) == doctest::Approx(r.value(0.2, c)).epsilon(1e-10));
  const kernels::AuxiliaryKernel r1(kernels::RescaledKernel(kernels::Mollifier(1), 0.1), 1.0);
  const std::array<double, 1> p{0.04};
  const std::array<double, 1> m{-0.04};
  CHECK(r1.value(0.5, p) == doctest::Approx(r1.value(0.5, m)).epsilon(1e-12));
}

TEST_CASE("auxiliary gradient matches a centred difference") {
  const kernels::AuxiliaryKernel r(kernels::RescaledKernel(kernels::Mollifier(2), 0.1), 1.0);
  const std::array<double, 2> x{0.12, -0.05};
  const auto g = r.gradient(0.3, x);
  for (int a = 0; a < 2; ++a) {
    auto xp = x;
    auto xm = x;
    xp[a] += 1e-5;
    xm[a] -= 1e-5;
    CHECK(g[a] == doctest::Approx((r.value(0.3, xp) - r.value(0.3, xm)) / 2e-5).epsilon(1e-5));
  }
}

TEST_CASE("bound envelope examples") {
  CHECK(kernels::bound_envelope(2, 0.1, 0.0, EnvelopeBranch::value) == doctest::Approx(2.302585).epsilon(1e-6));
  CHECK(kernels::bound_envelope(1, 0.1, 0.5, EnvelopeBranch::value) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(kernels::bound_envelope(3, 0.1, 0.01, EnvelopeBranch::gradient) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(kernels::bound_envelope(3, 0.1, 2.0, EnvelopeBranch::value) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));
}

TEST_CASE("d = 3 auxiliary function scales like 1/eps near the origin") {
  // r_eps(t, x) eps should settle as eps -> 0 for |x| << eps.
  std::vector<double> scaled;
  for (double eps : {0.02, 0.01, 0.005}) {
    const kernels::AuxiliaryKernel r(kernels::RescaledKernel(kernels::Mollifier(3), eps), 1.0);
    const std::array<double, 3> x{0.1 * eps, 0.0, 0.0};
    scaled.push_back(r.value(0.5, x) * eps);
  }
  CHECK(scaled[2] == doctest::Approx(scaled[1]).epsilon(0.05));
  CHECK(scaled[1] == doctest::Approx(scaled[0]).epsilon(0.1));
}

}  // TEST_SUITE
