#pragma once

// Experiment orchestration: configuration (flat key = value schema), the
// convergence study, the diagnostic suites and CSV/JSON emission.

#include "kpp/fkpp_solver.hpp"
#include "kpp/kernels.hpp"
#include "kpp/particle_system.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace kpp::harness {

struct StudySettings {
  std::vector<double> deltas{0.05, 0.1, 0.2};
  std::vector<std::int64_t> n_ladder{1000, 10000, 100000};
  std::size_t replicates = 20;
  std::uint64_t master_seed = 20240601;
  int snapshot_intervals = 20;
  double primary_delta = 0.1;
  kernels::BumpShape bump = kernels::BumpShape::cubic_bspline;
  /// Extra half width of the PDE box beyond the field grid.
  double pde_margin = 4.0;
};

struct DiagnosticSettings {
  std::size_t replicates = 100000;  ///< Yule / BBM Monte Carlo replicates
  std::size_t seeds = 20;           ///< particle-system seeds per N
  std::int64_t n_small = 1000;
  std::int64_t n_large = 10000;
  double delta = 0.1;
  std::size_t bbm_replicates = 20000;
  double test_radius = 2.0;        ///< support of the weak-form test function
  double shift = 0.1;              ///< |z| in the triple statistic
  int snapshot_intervals = 20;     ///< 0 means every step
};

struct ExperimentConfig {
  std::string experiment_id = "kpp";
  std::string output_dir = "out";
  particles::ModelParameters model;
  particles::InitialCondition initial;
  pde::PdeGrid pde;
  StudySettings study;
  DiagnosticSettings diag;

  void validate() const;
};

/// Defaults of the desk-scale study: d = 1, u_0 = 0.5 on [-1, 1], T = 1,
/// local rule, self term excluded from the death rate.
ExperimentConfig default_config();

/// Sets one flat key (e.g. "model.n", "study.deltas"); unknown keys throw.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);
/// Reads `key = value` lines; '#' starts a comment.
void load_config_file(ExperimentConfig& config, const std::filesystem::path& path);
/// The documented key list, for --help and the README.
std::vector<std::string> setting_keys();

nlohmann::json to_json(const ExperimentConfig& config);

struct ChannelPoint {
  double time = 0.0;
  std::string channel;
  double value = 0.0;
  /// Smoothing width of this value; NaN falls back to the run's delta.
  double delta = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
  std::string suite;
  std::int64_t n = 0;
  double delta = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  std::size_t replicate = 0;
  bool ok = true;
  std::string error;
  std::vector<ChannelPoint> series;
};

struct Verdict {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment_id;
  nlohmann::json config;
  std::vector<RunRecord> runs;
  nlohmann::json aggregates = nlohmann::json::object();
  std::vector<Verdict> verdicts;

  bool all_pass() const;
};

/// Seed of replicate r at scale N under the master seed.
std::uint64_t cell_seed(std::uint64_t master, std::int64_t n, std::size_t replicate);

/// For each N and seed: simulate, smooth with every delta, and measure the
/// space-time L1 distance to the PDE solution. One run record per (N, seed);
/// failing cells are recorded and skipped.
ExperimentReport run_convergence_study(const ExperimentConfig& config);

/// Suites: kernel-bounds, yule, bbm-density, pair-triple, martingale,
/// pde-cross, spatial.
ExperimentReport run_diagnostics(const ExperimentConfig& config, const std::string& suite);
std::vector<std::string> suite_names();

struct OutputFormats {
  bool csv = true;
  bool json = true;
};

/// Writes <id>_runs.csv (long format, only when there are runs) and
/// <id>_summary.json into `dir`. Returns the written paths.
std::vector<std::filesystem::path> emit_outputs(const ExperimentReport& report, const std::filesystem::path& dir,
                                                OutputFormats formats = {});

/// Individual checks; each appends its verdicts (and runs) to `report`.
namespace checks {
void yule_mean(const ExperimentConfig& c, ExperimentReport& report);
void yule_law(const ExperimentConfig& c, ExperimentReport& report);
void population_domination(const ExperimentConfig& c, ExperimentReport& report);
void pair_bound(const ExperimentConfig& c, ExperimentReport& report);
void triple_trend(const ExperimentConfig& c, ExperimentReport& report);
void scaling_trend(const ExperimentConfig& c, ExperimentReport& report);
void martingale_decay(const ExperimentConfig& c, ExperimentReport& report);
void density_bound(const ExperimentConfig& c, ExperimentReport& report);
void pde_exactness(const ExperimentConfig& c, ExperimentReport& report);
void uniqueness(const ExperimentConfig& c, ExperimentReport& report);
void kernel_analytics(const ExperimentConfig& c, ExperimentReport& report);
void spatial_oracle(const ExperimentConfig& c, ExperimentReport& report);
}  // namespace checks

}  // namespace kpp::harness
