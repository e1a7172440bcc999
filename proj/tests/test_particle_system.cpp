#include "kpp/particle_system.hpp"
#include "kpp/stats.hpp"

#include "doctest.h"

#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace kpp;
using namespace kpp::particles;

namespace {

ModelParameters model(std::int64_t n, std::uint64_t seed) {
  ModelParameters p;
  p.n_scale = n;
  p.seed = seed;
  return p;
}

InitialCondition unit_mass() {
  InitialCondition ic;
  ic.height = 0.5;
  ic.radius = 1.0;
  return ic;
}

std::size_t final_population(const ModelParameters& p) {
  const auto traj = run(sample_initial(unit_mass(), p), p, {p.horizon});
  return traj.snapshots.back().size();
}

std::set<std::string> labels(const ParticleConfiguration& c) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < c.size(); ++i) out.insert(c.label(i));
  return out;
}

}  // namespace

TEST_SUITE("particle_system") {

TEST_CASE("initial sample: size, support and centring") {
  const auto p = model(10000, 4);
  const auto c = sample_initial(unit_mass(), p);
  CHECK(c.size() == 10000);
  CHECK(c.time == 0.0);
  double sum = 0.0;
  for (double x : c.positions.coords) {
    CHECK(std::abs(x) <= 1.0);
    sum += x;
  }
  // Uniform on [-1, 1] has variance 1/3.
  CHECK(std::abs(sum / 1e4) <= 3.0 * std::sqrt(1.0 / 3.0 / 1e4));
  CHECK(c.label(0) == "1");
  CHECK(c.label(9999) == "10000");
}

TEST_CASE("initial sample follows u0 / mass") {
  int accepted = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto c = sample_initial(unit_mass(), model(10000, seed));
    const double d = stats::ks_statistic(c.positions.coords, [](double x) { return std::clamp((x + 1.0) / 2.0, 0.0, 1.0); });
    accepted += d <= stats::ks_critical_value(0.01, c.size());
  }
  CHECK(accepted >= 95);
}

TEST_CASE("initial sample of a bump in d = 2 stays in the ball") {
  InitialCondition ic;
  ic.dim = 2;
  ic.shape = InitialShape::bump;
  ic.height = 1.0;
  ic.radius = 0.5;
  auto p = model(5000, 2);
  p.dim = 2;
  const auto c = sample_initial(ic, p);
  CHECK(static_cast<double>(c.size()) == doctest::Approx(5000 * ic.mass()).epsilon(1e-3));
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::hypot(c.positions[i][0], c.positions[i][1]) <= 0.5);
  // int (1 - r^2/R^2)^2 over the disc = pi R^2 / 3.
  CHECK(ic.mass() == doctest::Approx(std::numbers::pi * 0.25 / 3.0).epsilon(1e-6));
}

TEST_CASE("death rate of an isolated particle under the local rule") {
  auto p = model(1000, 1);
  const auto c = make_configuration(Positions(1, {0.3}), p);
  CHECK(death_rates(c, p)[0] == doctest::Approx(0.9375).epsilon(1e-12));
  p.include_self = false;
  CHECK(death_rates(c, p)[0] == 0.0);
  p.include_self = true;
  const auto pair = make_configuration(Positions(1, {0.3, 0.3}), p);
  CHECK(death_rates(pair, p)[1] == doctest::Approx(2 * 0.9375).epsilon(1e-12));
}

TEST_CASE("clamped variant moves the interaction into the birth rate") {
  auto p = model(10, 1);
  p.rate_variant = RateVariant::clamped;
  p.eps = 0.5;
  const auto c = make_configuration(Positions(1, {0.0, 0.01, 0.02, 5.0}), p);
  const auto r = event_rates(c, p);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(r.birth[i] >= 0.0);
    CHECK(r.birth[i] <= 1.0);
    CHECK(r.death[i] == 0.0);
  }
  CHECK(r.birth[3] == doctest::Approx(1.0 - 1.875 / 10.0));
}

TEST_CASE("zero step is the identity and negative steps are rejected") {
  const auto p = model(500, 3);
  auto c = sample_initial(unit_mass(), p);
  const auto before = c.positions.coords;
  const auto rec = step(c, p, 0, 0.0);
  CHECK(rec.births == 0);
  CHECK(rec.deaths == 0);
  CHECK(c.positions.coords == before);
  CHECK_THROWS_AS(step(c, p, 1, -0.1), std::invalid_argument);
}

TEST_CASE("pure birth: mean population is e") {
  auto p = model(100, 0);
  p.deaths = DeathModel::none;
  p.motion = false;
  std::vector<double> ratio;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    p.seed = seed;
    ratio.push_back(static_cast<double>(final_population(p)) / 100.0);
  }
  const auto m = stats::mean_se(ratio);
  CHECK(std::abs(m.mean - std::exp(1.0)) <= 3 * m.se);
}

TEST_CASE("Bernoulli leap undershoots the birth mean by O(dt)") {
  auto p = model(100, 0);
  p.deaths = DeathModel::none;
  p.motion = false;
  p.scheme = SteppingScheme::bernoulli_leap;
  p.adaptive_dt = false;
  p.dt = 0.05;
  std::vector<double> ratio;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    p.seed = seed;
    ratio.push_back(static_cast<double>(final_population(p)) / 100.0);
  }
  const auto m = stats::mean_se(ratio);
  const double leap_mean = std::pow(2.0 - std::exp(-0.05), 20);
  CHECK(std::abs(m.mean - leap_mean) <= 3 * m.se);
  CHECK(std::exp(1.0) - m.mean > 3 * m.se);
}

TEST_CASE("constant death rate: survival probability exp(-D T)") {
  auto p = model(100, 0);
  p.births = false;
  p.deaths = DeathModel::constant;
  p.constant_death_rate = 0.7;
  std::vector<double> ratio;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    p.seed = seed;
    ratio.push_back(static_cast<double>(final_population(p)) / 100.0);
  }
  const auto m = stats::mean_se(ratio);
  CHECK(std::abs(m.mean - std::exp(-0.7)) <= 3 * m.se);
}

TEST_CASE("thinning agrees with the clock leap on the pure birth mean") {
  auto p = model(100, 0);
  p.deaths = DeathModel::none;
  p.scheme = SteppingScheme::thinning;
  std::vector<double> ratio;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    p.seed = seed;
    ratio.push_back(static_cast<double>(final_population(p)) / 100.0);
  }
  const auto m = stats::mean_se(ratio);
  CHECK(std::abs(m.mean - std::exp(1.0)) <= 3 * m.se);
}

TEST_CASE("interacting populations stay below the branching bound") {
  for (auto scheme : {SteppingScheme::tau_leap, SteppingScheme::thinning}) {
    auto p = model(1000, 0);
    p.scheme = scheme;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      p.seed = seed;
      const double ratio = static_cast<double>(final_population(p)) / 1000.0;
      CHECK(ratio >= 0.0);
      CHECK(ratio <= 1.5 * std::exp(1.0));
    }
  }
}

TEST_CASE("halving the step does not move the mean population") {
  auto p = model(1000, 0);
  p.adaptive_dt = false;
  std::vector<double> coarse;
  std::vector<double> fine;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    p.seed = seed;
    p.dt = 0.05;
    coarse.push_back(static_cast<double>(final_population(p)) / 1000.0);
    p.seed = seed + 1000;
    p.dt = 0.025;
    fine.push_back(static_cast<double>(final_population(p)) / 1000.0);
  }
  const auto a = stats::mean_se(coarse);
  const auto b = stats::mean_se(fine);
  CHECK(std::abs(a.mean - b.mean) <= 3 * std::hypot(a.se, b.se));
}

TEST_CASE("snapshots land on the requested times") {
  const auto p = model(200, 5);
  const auto c = sample_initial(unit_mass(), p);
  const auto traj = run(c, p, uniform_times(1.0, 4));
  REQUIRE(traj.snapshots.size() == 5);
  CHECK(traj.snapshots[0].positions.coords == c.positions.coords);
  for (int i = 0; i <= 4; ++i) CHECK(traj.snapshots[i].time == doctest::Approx(0.25 * i).epsilon(1e-12));
  CHECK_THROWS(run(c, p, {0.5, 0.25}));
  CHECK_THROWS(run(c, p, {2.0}));
}

TEST_CASE("same seed, same trajectory, whatever the thread count") {
  const auto p = model(2000, 17);
  const auto c = sample_initial(unit_mass(), p);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = run(c, p, {1.0}).snapshots.back();
  omp_set_num_threads(4);
  const auto b = run(c, p, {1.0}).snapshots.back();
  omp_set_num_threads(saved);
  CHECK(a.positions.coords == b.positions.coords);
  CHECK(labels(a) == labels(b));
}

TEST_CASE("labels of the interacting run are a subset of the pure birth run") {
  auto full = model(200, 8);
  full.adaptive_dt = false;
  full.dt = 0.02;
  auto birth_only = full;
  birth_only.deaths = DeathModel::none;
  const auto c = sample_initial(unit_mass(), full);
  const auto a = labels(run(c, full, {1.0}).snapshots.back());
  const auto b = labels(run(c, birth_only, {1.0}).snapshots.back());
  CHECK(a.size() < b.size());
  CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
}

TEST_CASE("genealogy is consistent with the alive configuration") {
  const auto p = model(300, 6);
  const auto end = run(sample_initial(unit_mass(), p), p, {1.0}).snapshots.back();
  const Genealogy& g = *end.genealogy;
  for (std::uint32_t r = 0; r < g.size(); ++r) {
    const auto& rec = g[r];
    CHECK(rec.birth_time <= rec.end_time);
    if (rec.parent < 0) {
      CHECK(rec.depth == 1);
      CHECK(rec.digit == 0);
      continue;
    }
    const auto& parent = g[static_cast<std::uint32_t>(rec.parent)];
    CHECK(parent.end == RecordEnd::branched);
    CHECK(parent.end_time == rec.birth_time);
    CHECK(rec.depth == parent.depth + 1);
    CHECK((rec.digit == 1 || rec.digit == 2));
    CHECK(rec.progenitor == parent.progenitor);
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < end.size(); ++i) {
    CHECK(g[end.records[i]].end == RecordEnd::alive);
    const auto digits = g.digits(end.records[i]);
    CHECK(digits.front() >= 1);
    CHECK(digits.front() <= 300);
    CHECK(seen.insert(end.label(i)).second);
  }
}

TEST_CASE("explosion guard aborts runaway populations") {
  auto p = model(1, 0);
  p.deaths = DeathModel::none;
  p.explosion_factor = 1.01;
  int thrown = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    p.seed = seed;
    try {
      final_population(p);
    } catch (const ExplosionError&) {
      ++thrown;
    }
  }
  CHECK(thrown > 0);
}

TEST_CASE("parameter validation") {
  auto p = model(0, 1);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = model(10, 1);
  p.eps = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = model(10, 1);
  p.dim = 4;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS(parse_stepping_scheme("euler"));
  CHECK(parse_rate_variant("clamped") == RateVariant::clamped);
  CHECK(model(1000, 1).resolved_eps() == doctest::Approx(1e-3));
  p = model(100, 1);
  p.dim = 2;
  CHECK(p.resolved_eps() == doctest::Approx(0.1));
  CHECK(p.density_constant() == doctest::Approx(1.0));
}

TEST_CASE("snapshot csv layout") {
  auto p = model(3, 1);
  p.dim = 2;
  const auto c = make_configuration(Positions(2, {0.0, 1.0, 2.0, 3.0}), p);
  std::ostringstream out;
  write_snapshot_csv_header(out, 2);
  write_snapshot_csv(out, c);
  CHECK(out.str() == "time,particle_id,lineage,x1,x2\n0,0,1,0,1\n0,1,2,2,3\n");
}

}  // TEST_SUITE
