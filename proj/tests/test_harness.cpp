#include "kpp/harness.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kpp;
using namespace kpp::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("kpp_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A study small enough for a unit test.
ExperimentConfig tiny_study() {
  auto c = default_config();
  c.experiment_id = "tiny";
  c.study.n_ladder = {50, 100};
  c.study.replicates = 2;
  c.study.deltas = {0.2};
  c.study.primary_delta = 0.2;
  c.study.snapshot_intervals = 4;
  c.pde.spacing = 0.05;
  return c;
}

std::size_t count(const RunRecord& r, const std::string& channel) {
  std::size_t k = 0;
  for (const auto& p : r.series) k += p.channel == channel;
  return k;
}

}  // namespace

TEST_SUITE("harness_cli") {

TEST_CASE("defaults") {
  const auto c = default_config();
  CHECK_NOTHROW(c.validate());
  CHECK(c.model.dim == 1);
  CHECK(c.model.horizon == 1.0);
  CHECK_FALSE(c.model.include_self);
  CHECK(c.initial.mass() == doctest::Approx(1.0));
  CHECK(c.study.n_ladder == std::vector<std::int64_t>{1000, 10000, 100000});
}

TEST_CASE("flat keys set and echo values") {
  auto c = default_config();
  apply_setting(c, "model.n", "500");
  apply_setting(c, "model.eps", "0.05");
  apply_setting(c, "model.dim", "2");
  apply_setting(c, "study.deltas", "0.1, 0.2");
  apply_setting(c, "study.primary_delta", "0.2");
  apply_setting(c, "model.scheme", "thinning");
  CHECK(c.model.n_scale == 500);
  REQUIRE(c.model.eps.has_value());
  CHECK(*c.model.eps == 0.05);
  CHECK(c.initial.dim == 2);
  CHECK(c.pde.dim == 2);
  CHECK(c.study.deltas == std::vector<double>{0.1, 0.2});
  CHECK(c.model.scheme == particles::SteppingScheme::thinning);
  apply_setting(c, "model.eps", "local");
  CHECK_FALSE(c.model.eps.has_value());

  const auto j = to_json(c);
  for (const auto& key : setting_keys()) CHECK(j.contains(key));
  CHECK(j["model.n"] == 500);
}

TEST_CASE("bad keys and values are rejected") {
  auto c = default_config();
  CHECK_THROWS_AS(apply_setting(c, "model.nn", "5"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "model.n", "many"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(c, "model.scheme", "euler"), std::invalid_argument);
  c.study.n_ladder = {1000, 1000};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_config();
  c.study.primary_delta = 0.3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = default_config();
  c.model.eps = 0.5;
  c.model.n_scale = 100000;
  // eps^{-d} <= C N holds for any fixed eps, so this is fine.
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config file with comments") {
  const auto dir = scratch("config");
  {
    std::ofstream f(dir / "run.cfg");
    f << "# desk study\n\nmodel.n = 2000   # scale\n  study.replicates=3\nexperiment.id = from_file\n";
  }
  auto c = default_config();
  load_config_file(c, dir / "run.cfg");
  CHECK(c.model.n_scale == 2000);
  CHECK(c.study.replicates == 3);
  CHECK(c.experiment_id == "from_file");
  {
    std::ofstream f(dir / "bad.cfg");
    f << "model.n 2000\n";
  }
  CHECK_THROWS(load_config_file(c, dir / "bad.cfg"));
  CHECK_THROWS(load_config_file(c, dir / "missing.cfg"));
}

TEST_CASE("study cardinality: 2 Ns x 2 seeds give 4 run records") {
  const auto report = run_convergence_study(tiny_study());
  REQUIRE(report.runs.size() == 4);
  for (const auto& r : report.runs) {
    CHECK(r.ok);
    CHECK(count(r, "l1_error") == 1);
    CHECK(count(r, "population") == 5);
    CHECK(count(r, "mass") == 5);
  }
  CHECK(report.runs[0].seed == cell_seed(20240601, 50, 0));
  CHECK(report.runs[0].seed != report.runs[1].seed);
  REQUIRE(report.verdicts.size() == 1);
  CHECK(report.aggregates["l1_error"].size() == 2);
}

TEST_CASE("zero initial data gives zero errors") {
  auto c = tiny_study();
  c.initial.height = 0.0;
  const auto report = run_convergence_study(c);
  for (const auto& r : report.runs) {
    REQUIRE(r.ok);
    for (const auto& p : r.series) CHECK(p.value == 0.0);
  }
}

TEST_CASE("a failing cell does not disturb the others") {
  auto c = tiny_study();
  c.study.n_ladder = {1, 2};
  c.study.replicates = 8;
  c.model.explosion_factor = 1.01;
  const auto report = run_convergence_study(c);
  REQUIRE(report.runs.size() == 16);
  std::size_t failed = 0;
  for (const auto& r : report.runs) {
    if (r.ok) {
      CHECK(count(r, "l1_error") == 1);
      CHECK(r.error.empty());
    } else {
      ++failed;
      CHECK(r.series.empty());
      CHECK(r.error.find("exceeded") != std::string::npos);
    }
  }
  CHECK(failed > 0);
  CHECK(failed < 16);
  CHECK(report.aggregates["failed_cells"] == failed);
  CHECK_FALSE(report.all_pass());

  // The surviving cells match a run without the failing ones.
  auto clean = c;
  clean.model.explosion_factor = 1e9;
  const auto reference = run_convergence_study(clean);
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    if (!report.runs[i].ok) continue;
    CHECK(report.runs[i].series.back().value == reference.runs[i].series.back().value);
  }
}

TEST_CASE("outputs: empty report, determinism and layout") {
  const auto empty_dir = scratch("empty");
  ExperimentReport empty;
  empty.experiment_id = "nothing";
  const auto written = emit_outputs(empty, empty_dir);
  REQUIRE(written.size() == 1);
  CHECK(written[0].filename() == "nothing_summary.json");
  const auto summary = nlohmann::json::parse(slurp(written[0]));
  CHECK(summary["run_count"] == 0);
  CHECK_FALSE(fs::exists(empty_dir / "nothing_runs.csv"));

  const auto a = scratch("a");
  const auto b = scratch("b");
  const auto first = emit_outputs(run_convergence_study(tiny_study()), a);
  const auto second = emit_outputs(run_convergence_study(tiny_study()), b);
  REQUIRE(first.size() == 2);
  REQUIRE(second.size() == 2);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].filename() == second[i].filename());
    CHECK(slurp(first[i]) == slurp(second[i]));
  }
  const std::string csv = slurp(a / "tiny_runs.csv");
  CHECK(csv.rfind("experiment,N,delta,seed,time,channel,value\n", 0) == 0);
  CHECK(csv.find("tiny,100,0.20000000000000001,") != std::string::npos);
  const auto s = nlohmann::json::parse(slurp(a / "tiny_summary.json"));
  CHECK(s["run_count"] == 4);
  CHECK(s["config"]["model.n"].is_number());
  CHECK(s["verdicts"].size() == 1);

  CHECK_THROWS(emit_outputs(empty, a / "tiny_runs.csv" / "nested"));
}

TEST_CASE("diagnostics: unknown suite rejected, yule suite passes") {
  auto c = default_config();
  CHECK_THROWS_AS(run_diagnostics(c, "bogus"), std::invalid_argument);
  c.diag.replicates = 20000;
  const auto report = run_diagnostics(c, "yule");
  CHECK(report.verdicts.size() == 3);
  CHECK(report.all_pass());
  CHECK(report.config["diag.suite"] == "yule");
  const auto again = run_diagnostics(c, "yule");
  CHECK(again.aggregates.dump() == report.aggregates.dump());
}

TEST_CASE("pde-cross reports the weak-form residual of the grid solution") {
  const auto report = run_diagnostics(default_config(), "pde-cross");
  const auto& u = report.aggregates["uniqueness"];
  REQUIRE(u.contains("pde_weak_residual"));
  CHECK(std::abs(u["pde_weak_residual"].get<double>()) <= 1e-3);
  for (const auto& v : report.verdicts) CHECK(v.name != "pde_weak_residual");
}

TEST_CASE("suite names") {
  const auto names = suite_names();
  for (const char* s : {"kernel-bounds", "yule", "bbm-density", "pair-triple", "martingale", "pde-cross", "spatial"}) {
    CHECK(std::find(names.begin(), names.end(), s) != names.end());
  }
}

}  // TEST_SUITE
