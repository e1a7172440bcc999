#include "kpp/field.hpp"
#include "kpp/stats.hpp"

#include "doctest.h"

#include <array>
#include <cmath>
#include <random>
#include <sstream>

using namespace kpp;

TEST_SUITE("field") {

TEST_CASE("symmetric grid layout") {
  const auto g = symmetric_grid(2, 1.0, 0.25);
  CHECK(g.counts[0] == 9);
  CHECK(g.counts[1] == 9);
  CHECK(g.size() == 81);
  CHECK(g.origin[0] == doctest::Approx(-1.0));
  CHECK(g.upper(1) == doctest::Approx(1.0));
  CHECK(g.cell_volume() == doctest::Approx(0.0625));
  std::array<double, 2> x{};
  g.node(10, x);
  CHECK(x[0] == doctest::Approx(-0.75));
  CHECK(x[1] == doctest::Approx(-0.75));
  CHECK(g.flatten(g.unflatten(37)) == 37);
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS(symmetric_grid(4, 1.0, 0.1));
  CHECK_THROWS(symmetric_grid(1, 1.0, 0.0));
  CHECK_THROWS(symmetric_grid(1, -1.0, 0.1));
}

TEST_CASE("binary round trip is exact") {
  for (int d = 1; d <= 3; ++d) {
    SmoothedField f(symmetric_grid(d, 0.5, 0.1), 0.375);
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = std::sin(0.1 * static_cast<double>(i)) / 3.0;
    std::stringstream buffer;
    write_field_binary(buffer, f);
    const auto g = read_field_binary(buffer);
    CHECK(g.grid.same_as(f.grid));
    CHECK(g.time == f.time);
    CHECK(g.values == f.values);
  }
}

TEST_CASE("binary reader rejects bad input") {
  std::stringstream junk("not a field");
  CHECK_THROWS(read_field_binary(junk));
  SmoothedField f(symmetric_grid(1, 0.5, 0.1), 0.0);
  std::stringstream buffer;
  write_field_binary(buffer, f);
  std::string bytes = buffer.str();
  bytes.resize(bytes.size() - 4);
  std::stringstream truncated(bytes);
  CHECK_THROWS(read_field_binary(truncated));
}

TEST_CASE("csv layout") {
  SmoothedField f(symmetric_grid(1, 0.1, 0.1), 0.5);
  f.values = {0.0, 1.5, 0.25};
  std::ostringstream out;
  write_field_csv(out, f);
  CHECK(out.str().rfind("time,x1,value\n", 0) == 0);
  CHECK(out.str().find("0.5,0,1.5") != std::string::npos);
}

TEST_CASE("restriction keeps coinciding nodes") {
  SmoothedField fine(symmetric_grid(1, 1.0, 0.05), 0.0);
  for (std::size_t i = 0; i < fine.values.size(); ++i) fine.values[i] = static_cast<double>(i);
  const auto coarse = restrict_to(fine, symmetric_grid(1, 0.5, 0.1));
  REQUIRE(coarse.values.size() == 11);
  CHECK(coarse.values.front() == 10.0);
  CHECK(coarse.values.back() == 30.0);
  CHECK_THROWS(restrict_to(fine, symmetric_grid(1, 0.5, 0.03)));
}

TEST_CASE("integral of a constant") {
  SmoothedField f(symmetric_grid(2, 1.0, 0.1), 0.0);
  std::fill(f.values.begin(), f.values.end(), 2.0);
  CHECK(f.integral() == doctest::Approx(2.0 * 21 * 21 * 0.01));
  CHECK(f.max() == 2.0);
}

}  // TEST_SUITE

TEST_SUITE("stats") {

TEST_CASE("mean and standard error") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  const auto m = stats::mean_se(xs);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.variance == doctest::Approx(5.0 / 3.0));
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 12.0)));
}

TEST_CASE("chi-square of a hand-counted die") {
  std::vector<std::uint64_t> rolls;
  const int counts[] = {5, 10, 15, 10, 10, 10};
  for (int v = 0; v < 6; ++v) rolls.insert(rolls.end(), counts[v], static_cast<std::uint64_t>(v));
  const auto r = stats::chi_square_discrete(rolls, [](std::uint64_t v) { return v < 6 ? 1.0 / 6.0 : 0.0; });
  CHECK(r.bins == 6);
  CHECK(r.dof == 5);
  CHECK(r.statistic == doctest::Approx(5.0));
  CHECK(r.p_value == doctest::Approx(0.415880).epsilon(1e-5));
}

TEST_CASE("Kolmogorov-Smirnov statistics") {
  const std::vector<double> sample{0.1, 0.4, 0.7};
  // Uniform CDF: gaps are 1/3 - 0.1, 0.4 - 1/3, 2/3 - 0.4 ..., largest 0.3.
  CHECK(stats::ks_statistic(sample, [](double x) { return x; }) == doctest::Approx(0.3));
  CHECK(stats::ks_two_sample_statistic({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  CHECK(stats::ks_two_sample_statistic({1.0, 2.0}, {3.0, 4.0}) == 1.0);
  CHECK(stats::ks_p_value(0.0, 100) == 1.0);
  // Large-n limit: lambda = 1.3581 is the 5% point.
  CHECK(stats::ks_p_value(1.3581 / 1000.0, 1e6) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(stats::ks_critical_value(0.01, 100) == doctest::Approx(0.16276));
  CHECK_THROWS(stats::ks_critical_value(0.2, 10));
}

TEST_CASE("uniform samples pass the KS test at the expected rate") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int rejected = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> s(500);
    for (double& x : s) x = u(gen);
    rejected += stats::ks_statistic(s, [](double x) { return x; }) > stats::ks_critical_value(0.05, s.size());
  }
  CHECK(rejected <= 20);
}

TEST_CASE("least squares recovers an exact line") {
  const std::vector<double> x{0.0, 1.0, 2.0, 5.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 - 0.5 * v);
  const auto fit = stats::least_squares(x, y);
  CHECK(fit.slope == doctest::Approx(-0.5));
  CHECK(fit.intercept == doctest::Approx(3.0));
}

}  // TEST_SUITE
