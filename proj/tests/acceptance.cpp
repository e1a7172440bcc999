// Acceptance criteria 1-11 with pinned parameters. One PASS/FAIL line per
// criterion; the exit code is nonzero when any selected criterion fails.

#include "kpp/harness.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace {

using kpp::harness::ExperimentConfig;
using kpp::harness::ExperimentReport;

struct Criterion {
  const char* title;
  std::function<void(ExperimentConfig&)> pin;
  std::function<void(const ExperimentConfig&, ExperimentReport&)> check;
};

std::map<int, Criterion> criteria() {
  namespace checks = kpp::harness::checks;
  std::map<int, Criterion> m;
  m[1] = {"Yule mean, T = 1, 1e5 replicates, within 3 SE of e",
          [](ExperimentConfig& c) { c.diag.replicates = 100000; },
          checks::yule_mean};
  m[2] = {"Yule law: geometric accepted (p > 0.01), Poisson rejected (p < 0.01)",
          [](ExperimentConfig& c) { c.diag.replicates = 100000; },
          checks::yule_law};
  m[3] = {"population domination, N = 1e3, 100 seeds: mean N(T)/N <= e int u0 (1 + 3 SE)",
          [](ExperimentConfig& c) {
            c.model.n_scale = 1000;
            c.diag.seeds = 100;
          },
          checks::population_domination};
  m[4] = {"pair statistic with theta_eps, N = 1e3, 50 seeds: mean <= int u0 (1 + T e^T)",
          [](ExperimentConfig& c) {
            c.model.n_scale = 1000;
            c.diag.seeds = 50;
            c.diag.snapshot_intervals = 0;
          },
          checks::pair_bound};
  m[5] = {"scaling trend, delta = 0.1, N = 1e3/1e4/1e5, 20 seeds: L1 error decreasing, last <= 0.1 T int u0",
          [](ExperimentConfig&) {},
          checks::scaling_trend};
  m[6] = {"martingale decay, 100 seeds, N = 1e3 vs 1e4: log-variance slope in [-1.3, -0.7]",
          [](ExperimentConfig& c) {
            c.diag.n_small = 1000;
            c.diag.n_large = 10000;
            c.diag.seeds = 100;
            c.diag.snapshot_intervals = 0;
          },
          checks::martingale_decay};
  m[7] = {"density bound, N = 1e5, delta = 0.1, 20 seeds: max f <= k + 2 in >= 95% of seeds",
          [](ExperimentConfig& c) {
            c.diag.n_large = 100000;
            c.diag.seeds = 20;
            c.diag.delta = 0.1;
            c.diag.bbm_replicates = 20000;
            c.diag.snapshot_intervals = 0;
          },
          checks::density_bound};
  m[8] = {"PDE exactness: constants 1e-12, logistic 2/3 at ln 2 within 1e-4, front speed sqrt 2 +- 5%",
          [](ExperimentConfig&) {},
          checks::pde_exactness};
  m[9] = {"uniqueness: solve vs 12 Picard iterations, sup distance <= 1e-3",
          [](ExperimentConfig&) {},
          checks::uniqueness};
  m[10] = {"kernel analytics: K(1,0), terminal value, residual <= 1e-3, envelope constants within 2x",
           [](ExperimentConfig&) {},
           checks::kernel_analytics};
  m[11] = {"spatial index vs brute force, 1000 configurations, 1e-12 relative",
           [](ExperimentConfig&) {},
           checks::spatial_oracle};
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> selected;
  bool verbose = false;
  app.add_option("-c,--criterion", selected, "criterion number(s), default all")->check(CLI::Range(1, 11));
  app.add_flag("-v,--verbose", verbose, "print every verdict");
  CLI11_PARSE(app, argc, argv);

  const auto all = criteria();
  if (selected.empty()) {
    for (const auto& [k, v] : all) selected.push_back(k);
  }

  int failures = 0;
  for (int id : selected) {
    const auto& crit = all.at(id);
    auto config = kpp::harness::default_config();
    config.experiment_id = "acceptance_" + std::to_string(id);
    crit.pin(config);
    ExperimentReport report;
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      config.validate();
      crit.check(config, report);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = error.empty() && !report.verdicts.empty() && report.all_pass();
    if (!pass) ++failures;
    std::printf("criterion %2d %s  %s  [%.1f s]\n", id, pass ? "PASS" : "FAIL", crit.title, seconds);
    if (!error.empty()) std::printf("    error: %s\n", error.c_str());
    for (const auto& v : report.verdicts) {
      if (!verbose && pass && report.verdicts.size() == 1) {
        std::printf("    value %.6g threshold %.6g  %s\n", v.value, v.threshold, v.detail.c_str());
        continue;
      }
      std::printf("    %-26s %s value %.6g threshold %.6g  %s\n", v.name.c_str(), v.pass ? "ok  " : "FAIL", v.value,
                  v.threshold, v.detail.c_str());
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
