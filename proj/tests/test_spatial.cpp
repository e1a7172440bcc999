#include "kpp/spatial_index.hpp"

#include "doctest.h"
#include "support.hpp"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

using namespace kpp;
using kpp::testing::uniform_points;

namespace {

std::set<std::uint32_t> candidates(const spatial::CellGrid& grid, std::span<const double> x) {
  std::set<std::uint32_t> out;
  grid.for_each_candidate(x, [&](std::uint32_t k) { out.insert(k); });
  return out;
}

void check_against_brute_force(const Positions& p, double eps) {
  const kernels::RescaledKernel kernel(kernels::Mollifier(p.dim), eps);
  const auto grid = spatial::CellGrid::build(p, kernel.support_radius());
  const auto fast = spatial::local_interaction_sums(grid, kernel, p);
  const auto slow = spatial::local_interaction_sums_reference(kernel, p);
  REQUIRE(fast.size() == slow.size());
  for (std::size_t j = 0; j < fast.size(); ++j) {
    CHECK(fast[j] == doctest::Approx(slow[j]).epsilon(1e-12));
  }
}

}  // namespace

TEST_SUITE("spatial_index") {

TEST_CASE("empty configuration") {
  const Positions p(2);
  const auto grid = spatial::CellGrid::build(p, 0.1);
  CHECK(grid.particle_count() == 0);
  CHECK(grid.occupied_cells() == 0);
  const std::array<double, 2> x{0.0, 0.0};
  CHECK(candidates(grid, x).empty());
  const kernels::RescaledKernel k(kernels::Mollifier(2), 0.1);
  CHECK(spatial::local_interaction_sums(grid, k, p).empty());
}

TEST_CASE("one particle occupies one cell") {
  const Positions p(3, {0.3, -0.2, 5.0});
  const auto grid = spatial::CellGrid::build(p, 0.1);
  CHECK(grid.occupied_cells() == 1);
  CHECK(grid.registered() == 1);
}

TEST_CASE("every particle is registered exactly once") {
  const auto p = uniform_points(2, 100, 0.0, 1.0, 7);
  const auto grid = spatial::CellGrid::build(p, 0.1);
  CHECK(grid.registered() == 100);
  for (std::size_t i = 0; i < p.size(); ++i) {
    int seen = 0;
    grid.for_each_candidate(p[i], [&](std::uint32_t k) { seen += k == i; });
    CHECK(seen == 1);
  }
}

TEST_CASE("isolated particles only see themselves") {
  const Positions p(1, {0.0, 10.0});
  const kernels::RescaledKernel k(kernels::Mollifier(1), 0.1);
  const auto grid = spatial::CellGrid::build(p, k.support_radius());
  const auto s = spatial::local_interaction_sums(grid, k, p);
  CHECK(s[0] == doctest::Approx(9.375).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(9.375).epsilon(1e-14));
}

TEST_CASE("queries find every pair within the cell size") {
  for (int d = 1; d <= 3; ++d) {
    const auto p = uniform_points(d, 400, -1.0, 1.0, 11 + d);
    const double h = 0.2;
    const auto grid = spatial::CellGrid::build(p, h);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto found = candidates(grid, p[i]);
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (distance_squared(p[i], p[k]) <= h * h) CHECK(found.count(static_cast<std::uint32_t>(k)) == 1);
      }
    }
  }
}

TEST_CASE("interaction sums agree with brute force") {
  check_against_brute_force(uniform_points(2, 200, 0.0, 1.0, 3), 0.05);
  for (int d = 1; d <= 3; ++d) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      check_against_brute_force(uniform_points(d, 150, -0.5, 0.5, 100 * d + seed), 0.08);
    }
  }
}

TEST_CASE("coincident points and far outliers") {
  // A far outlier makes the key box huge, which switches to the sparse layout.
  auto p = uniform_points(2, 50, 0.0, 0.2, 5);
  const std::array<double, 2> same{0.1, 0.1};
  for (int i = 0; i < 5; ++i) p.push_back(same);
  const std::array<double, 2> outlier{1e6, -1e6};
  p.push_back(outlier);
  check_against_brute_force(p, 0.05);
}

TEST_CASE("inserted particles are found by later queries") {
  auto p = uniform_points(1, 20, 0.0, 1.0, 9);
  auto grid = spatial::CellGrid::build(p, 0.1);
  const std::array<double, 1> x{0.55};
  p.push_back(x);
  grid.insert(20, x);
  CHECK(grid.particle_count() == 21);
  CHECK(candidates(grid, x).count(20) == 1);
  CHECK(grid.inserted().size() == 1);
  check_against_brute_force(p, 0.1);
}

TEST_CASE("mean candidates stay bounded at fixed density") {
  // n points on [0, n/100]: the number of neighbours per query is set by
  // the density alone.
  const auto a = uniform_points(1, 1000, 0.0, 10.0, 1);
  const auto b = uniform_points(1, 10000, 0.0, 100.0, 2);
  const double ca = spatial::mean_candidates(spatial::CellGrid::build(a, 0.05), a);
  const double cb = spatial::mean_candidates(spatial::CellGrid::build(b, 0.05), b);
  CHECK(cb < 1.5 * ca);
}

TEST_CASE("results do not depend on the thread count") {
  const auto p = uniform_points(2, 3000, 0.0, 1.0, 21);
  const kernels::RescaledKernel k(kernels::Mollifier(2), 0.02);
  const auto grid = spatial::CellGrid::build(p, k.support_radius());
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = spatial::local_interaction_sums(grid, k, p);
  omp_set_num_threads(4);
  const auto four = spatial::local_interaction_sums(grid, k, p);
  omp_set_num_threads(saved);
  CHECK(one == four);
}

TEST_CASE("invalid input is rejected") {
  const Positions p(1, {0.0, std::nan("")});
  CHECK_THROWS(spatial::CellGrid::build(p, 0.1));
  const Positions q(1, {0.0});
  CHECK_THROWS(spatial::CellGrid::build(q, 0.0));
}

}  // TEST_SUITE
