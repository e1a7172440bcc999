#include "kpp/empirical.hpp"
#include "kpp/stats.hpp"

#include "doctest.h"
#include "support.hpp"

#include <array>
#include <cmath>

using namespace kpp;
using namespace kpp::empirical;
using particles::ModelParameters;

namespace {

ModelParameters params(std::int64_t n, int dim = 1) {
  ModelParameters p;
  p.n_scale = n;
  p.dim = dim;
  return p;
}

ParticleConfiguration at(Positions x, std::int64_t n, double t = 0.0) {
  const int d = x.dim;
  auto c = particles::make_configuration(std::move(x), params(n, d));
  c.time = t;
  return c;
}

const SpaceTimeFunction one = [](double, std::span<const double>) { return 1.0; };

}  // namespace

TEST_SUITE("empirical") {

TEST_CASE("single particle gives the scaled bump") {
  const kernels::SmoothingBump eta(1, 0.1);
  const auto f = smooth_density(at(Positions(1, {0.0}), 10), eta, symmetric_grid(1, 1.0, 0.025));
  CHECK(f.max() == doctest::Approx(eta.unit_peak() / 0.1 / 10.0).epsilon(1e-14));
  CHECK(f.integral() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(f.clipped_mass == 0.0);
}

TEST_CASE("smoothing conserves mass and matches the direct loop") {
  for (int d = 1; d <= 3; ++d) {
    const double delta = d == 3 ? 0.2 : 0.1;
    const kernels::SmoothingBump eta(d, delta);
    const auto c = at(kpp::testing::uniform_points(d, d == 3 ? 60 : 300, -0.5, 0.5, 31 + d), 1000);
    const auto grid = symmetric_grid(d, 1.0, delta / 4);
    const auto fast = smooth_density(c, eta, grid);
    const auto slow = smooth_density_reference(c, eta, grid);
    CHECK(fast.integral() == doctest::Approx(static_cast<double>(c.size()) / 1000.0).epsilon(1e-10));
    for (std::size_t i = 0; i < fast.values.size(); ++i) {
      CHECK(fast.values[i] >= 0.0);
      CHECK(fast.values[i] == doctest::Approx(slow.values[i]).epsilon(1e-12).scale(1e-300));
    }
  }
}

TEST_CASE("particles near the grid edge are reported as clipped") {
  const kernels::SmoothingBump eta(1, 0.1);
  const auto f = smooth_density(at(Positions(1, {0.0, 0.98}), 4), eta, symmetric_grid(1, 1.0, 0.025));
  CHECK(f.clipped_mass == doctest::Approx(0.25));
  CHECK(f.integral() < 0.5);
}

TEST_CASE("Riemann weights") {
  const std::vector<double> t{0.0, 0.25, 0.5};
  const auto w = riemann_weights(t, 1.0);
  CHECK(w == std::vector<double>{0.25, 0.25, 0.5});
}

TEST_CASE("pair statistic of a stationary particle") {
  const kernels::RescaledKernel theta(kernels::Mollifier(1), 0.1);
  const std::vector<ParticleConfiguration> snaps{at(Positions(1, {0.0}), 10, 0.0), at(Positions(1, {0.0}), 10, 0.5)};
  CHECK(pair_statistic(snaps, interaction_kernel(theta), one, 1.0) == doctest::Approx(0.09375).epsilon(1e-14));
  const std::vector<ParticleConfiguration> more{at(Positions(1, {0.0, 0.05}), 10, 0.0),
                                                at(Positions(1, {0.0, 0.05}), 10, 0.5)};
  CHECK(pair_statistic(more, interaction_kernel(theta), one, 1.0) > 2 * 0.09375);
  CHECK(pair_statistic(snaps, constant_kernel(0.0), one, 1.0) == 0.0);
}

TEST_CASE("pair statistic: cell list and all-pairs paths agree") {
  const kernels::RescaledKernel theta(kernels::Mollifier(2), 0.1);
  const std::vector<ParticleConfiguration> snaps{at(kpp::testing::uniform_points(2, 400, 0.0, 1.0, 3), 400)};
  auto wide = interaction_kernel(theta);
  wide.support = std::numeric_limits<double>::infinity();
  const SpaceTimeFunction phi = [](double, std::span<const double> x) { return 1.0 + x[0]; };
  CHECK(pair_statistic(snaps, interaction_kernel(theta), phi, 1.0) ==
        doctest::Approx(pair_statistic(snaps, wide, phi, 1.0)).epsilon(1e-12));
}

TEST_CASE("triple statistic trivial cases") {
  const std::vector<ParticleConfiguration> snaps{at(Positions(1, {0.0, 0.1, 0.2}), 3, 0.0),
                                                 at(Positions(1, {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}), 3, 0.5)};
  CHECK(triple_statistic(snaps, constant_kernel(1.0), constant_kernel(0.0), one, one, 1.0) == 0.0);
  // (n/N)^3 is 1 on [0, 1/2) and 8 on [1/2, 1).
  CHECK(triple_statistic(snaps, constant_kernel(1.0), constant_kernel(1.0), one, one, 1.0) ==
        doctest::Approx(4.5).epsilon(1e-14));
}

TEST_CASE("test function derivatives") {
  const auto phi = polynomial_test_function(2, 1.5, 1.0);
  const std::array<double, 2> x{0.4, -0.3};
  const double h = 1e-4;
  const double dt = (phi.value(0.3 + h, x) - phi.value(0.3 - h, x)) / (2 * h);
  CHECK(phi.time_derivative(0.3, x) == doctest::Approx(dt).epsilon(1e-7));
  double lap = 0.0;
  for (int a = 0; a < 2; ++a) {
    auto xp = x;
    auto xm = x;
    xp[a] += h;
    xm[a] -= h;
    lap += (phi.value(0.3, xp) - 2 * phi.value(0.3, x) + phi.value(0.3, xm)) / (h * h);
  }
  CHECK(phi.laplacian(0.3, x) == doctest::Approx(lap).epsilon(1e-5));
  CHECK(phi.value(1.0, x) == 0.0);
  const std::array<double, 2> outside{1.5, 0.1};
  CHECK(phi.value(0.2, outside) == 0.0);
}

TEST_CASE("weak form of the empty system vanishes") {
  particles::InitialCondition u0;
  u0.height = 0.0;
  const kernels::RescaledKernel theta(kernels::Mollifier(1), 0.1);
  const std::vector<ParticleConfiguration> snaps{at(Positions(1), 100, 0.0), at(Positions(1), 100, 0.5)};
  const auto w = weak_form_residual(snaps, polynomial_test_function(1, 2.0, 1.0), u0, theta, 1.0);
  CHECK(w.residual == 0.0);
  TestFunction constant{one, [](double, std::span<const double>) { return 0.0; },
                        [](double, std::span<const double>) { return 0.0; }, 1.0};
  CHECK_THROWS_AS(weak_form_residual(snaps, constant, u0, theta, 1.0), std::invalid_argument);
}

TEST_CASE("weak-form residual is stable under halving the default step") {
  // Halves both the step cap and the adaptive rate target.
  particles::InitialCondition u0;
  const auto phi = polynomial_test_function(1, 2.0, 1.0);
  auto residuals = [&](double factor, std::uint64_t seed0) {
    std::vector<double> out;
    for (std::uint64_t s = 0; s < 100; ++s) {
      auto p = params(1000);
      p.seed = seed0 + s;
      p.dt *= factor;
      p.rate_dt_target *= factor;
      const auto traj = particles::run(particles::sample_initial(u0, p), p, {0.0}, true);
      out.push_back(weak_form_residual(traj.snapshots, phi, u0, p.kernel(), 1.0).residual);
    }
    return stats::mean_se(out);
  };
  const auto a = residuals(1.0, 0);
  const auto b = residuals(0.5, 1000);
  CHECK(std::abs(a.mean - b.mean) <= 3 * std::hypot(a.se, b.se));
}

TEST_CASE("space-time L1 error") {
  const auto grid = symmetric_grid(1, 1.0, 0.1);
  std::vector<SmoothedField> f{SmoothedField(grid, 0.0), SmoothedField(grid, 0.5)};
  for (auto& s : f) std::fill(s.values.begin(), s.values.end(), 0.5);
  CHECK(l1_space_time_error(f, f, 1.0) == 0.0);
  std::vector<SmoothedField> zero{SmoothedField(grid, 0.0), SmoothedField(grid, 0.5)};
  CHECK(l1_space_time_error(f, zero, 1.0) == doctest::Approx(0.5 * 21 * 0.1));
  zero[1].time = 0.6;
  CHECK_THROWS(l1_space_time_error(f, zero, 1.0));
}

TEST_CASE("density excess") {
  const auto grid = symmetric_grid(1, 1.0, 0.1);
  std::vector<SmoothedField> f{SmoothedField(grid, 0.0)};
  std::fill(f[0].values.begin(), f[0].values.end(), 3.0);
  const auto above = density_excess(f, 2.0, 1.0);
  CHECK(above.excess == doctest::Approx(3.0 * 21 * 0.1));
  CHECK(above.max_value == 3.0);
  CHECK(density_excess(f, 3.0, 1.0).excess == 0.0);
  CHECK(density_excess(f, std::numeric_limits<double>::infinity(), 1.0).excess == 0.0);
}

}  // TEST_SUITE
