// kppsim: command line front end.
//
//   kppsim simulate  [options]   one particle run: snapshots, population, fields
//   kppsim pde       [options]   F-KPP reference solve: fields at snapshot times
//   kppsim converge  [options]   convergence study over N, delta and seeds
//   kppsim diagnose --suite S    one diagnostic suite
//   kppsim keys                  list config keys
//
// Exit codes: 0 success (and all verdicts pass), 1 a verdict failed,
// 2 bad configuration or usage, 3 runtime failure.

#include "kpp/branching.hpp"
#include "kpp/empirical.hpp"
#include "kpp/fkpp_solver.hpp"
#include "kpp/harness.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using kpp::harness::ExperimentConfig;

namespace {

struct Overrides {
  std::optional<std::string> config_file;
  std::vector<std::string> sets;
  std::optional<std::int64_t> n;
  std::optional<std::string> epsilon;
  std::optional<int> dim;
  std::optional<double> t_final;
  std::optional<double> dt;
  std::optional<double> delta;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> id;
};

ExperimentConfig resolve(const Overrides& o) {
  auto c = kpp::harness::default_config();
  if (o.config_file) kpp::harness::load_config_file(c, *o.config_file);
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    kpp::harness::apply_setting(c, s.substr(0, eq), s.substr(eq + 1));
  }
  using kpp::harness::apply_setting;
  if (o.n) c.model.n_scale = *o.n;
  if (o.epsilon) apply_setting(c, "model.eps", *o.epsilon);
  if (o.dim) apply_setting(c, "model.dim", std::to_string(*o.dim));
  if (o.t_final) c.model.horizon = *o.t_final;
  if (o.dt) c.model.dt = *o.dt;
  if (o.delta) {
    c.study.deltas = {*o.delta};
    c.study.primary_delta = *o.delta;
    c.diag.delta = *o.delta;
  }
  if (o.seed) {
    c.model.seed = *o.seed;
    c.study.master_seed = *o.seed;
  }
  if (o.out) c.output_dir = *o.out;
  if (o.id) c.experiment_id = *o.id;
  c.validate();
  return c;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  return out;
}

void print_written(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) std::cout << "wrote " << p.string() << '\n';
}

int print_verdicts(const kpp::harness::ExperimentReport& report) {
  for (const auto& v : report.verdicts) {
    std::printf("%-28s %s value %.6g threshold %.6g  %s\n", v.name.c_str(), v.pass ? "PASS" : "FAIL", v.value,
                v.threshold, v.detail.c_str());
  }
  return report.all_pass() ? 0 : 1;
}

int cmd_simulate(const ExperimentConfig& c, int intervals, bool every_step, bool fields, bool binary,
                 bool genealogy) {
  namespace particles = kpp::particles;
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  const auto initial = particles::sample_initial(c.initial, c.model);
  const auto times = particles::uniform_times(c.model.horizon, intervals);

  auto snap = open_out(dir / (c.experiment_id + "_snapshots.csv"));
  particles::write_snapshot_csv_header(snap, c.model.dim);
  std::ofstream field_csv;
  std::ofstream field_bin;
  const kpp::kernels::SmoothingBump bump(c.model.dim, c.study.primary_delta, c.study.bump);
  const auto grid =
      kpp::empirical::default_field_grid(c.model.dim, c.initial.radius, c.model.horizon, c.study.primary_delta);
  if (fields) field_csv = open_out(dir / (c.experiment_id + "_fields.csv"));
  if (binary) field_bin = open_out(dir / (c.experiment_id + "_fields.bin"), std::ios::out | std::ios::binary);

  kpp::harness::ExperimentReport report;
  report.experiment_id = c.experiment_id;
  report.config = kpp::harness::to_json(c);
  kpp::harness::RunRecord rec;
  rec.suite = "simulate";
  rec.n = c.model.n_scale;
  rec.delta = c.study.primary_delta;
  rec.seed = c.model.seed;
  std::shared_ptr<particles::Genealogy> tree;
  bool first_field = true;
  const auto run = particles::run(
      initial, c.model, times,
      [&](const particles::ParticleConfiguration& s) {
        particles::write_snapshot_csv(snap, s);
        rec.series.push_back({s.time, "population", static_cast<double>(s.size()) / static_cast<double>(s.n_scale)});
        if (fields || binary) {
          const auto f = kpp::empirical::smooth_density(s, bump, grid);
          rec.series.push_back({s.time, "mass", f.integral()});
          rec.series.push_back({s.time, "max_density", f.max()});
          if (fields) kpp::write_field_csv(field_csv, f, first_field);
          if (binary) kpp::write_field_binary(field_bin, f);
          first_field = false;
        }
        tree = s.genealogy;
      },
      every_step);
  for (const auto& st : run.steps) rec.series.push_back({st.time, "max_rate", st.max_rate});
  report.runs.push_back(std::move(rec));
  report.aggregates["initial_population"] = run.initial_population;
  report.aggregates["steps"] = run.steps.size();
  if (genealogy && tree) {
    auto out = open_out(dir / (c.experiment_id + "_genealogy.nwk"));
    kpp::branching::write_newick(out, *tree, c.model.horizon);
  }
  print_written(kpp::harness::emit_outputs(report, dir));
  std::cout << "wrote " << (dir / (c.experiment_id + "_snapshots.csv")).string() << '\n';
  return 0;
}

int cmd_pde(const ExperimentConfig& c, int intervals, bool binary, bool picard, int iterations) {
  namespace pde = kpp::pde;
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  const auto times = kpp::particles::uniform_times(c.model.horizon, intervals);
  const auto u0 = pde::initial_field(c.initial, c.pde.spec());
  pde::PdeGrid grid = c.pde;
  if (picard) grid.dt = c.model.horizon / std::ceil(c.model.horizon / grid.step_limit());
  const auto sol = pde::solve(u0, c.model.horizon, grid, times);

  kpp::harness::ExperimentReport report;
  report.experiment_id = c.experiment_id;
  report.config = kpp::harness::to_json(c);
  kpp::harness::RunRecord rec;
  rec.suite = "pde";
  for (const auto& f : sol.fields) {
    rec.series.push_back({f.time, "mass", f.integral()});
    rec.series.push_back({f.time, "max", f.max()});
    if (c.model.dim == 1) rec.series.push_back({f.time, "front_position", pde::front_position(f)});
  }
  auto csv = open_out(dir / (c.experiment_id + "_pde.csv"));
  for (std::size_t i = 0; i < sol.fields.size(); ++i) kpp::write_field_csv(csv, sol.fields[i], i == 0);
  if (binary) {
    auto bin = open_out(dir / (c.experiment_id + "_pde.bin"), std::ios::out | std::ios::binary);
    for (const auto& f : sol.fields) kpp::write_field_binary(bin, f);
  }
  report.aggregates["steps"] = sol.steps;
  report.aggregates["max_boundary_value"] = sol.max_boundary_value;
  if (picard) {
    const auto pic = pde::mild_picard(u0, c.model.horizon, grid, iterations, times);
    double sup = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      for (std::size_t j = 0; j < sol.fields[i].values.size(); ++j) {
        sup = std::max(sup, std::abs(sol.fields[i].values[j] - pic.solution.fields[i].values[j]));
      }
    }
    for (std::size_t m = 0; m < pic.successive_sup.size(); ++m) {
      rec.series.push_back({static_cast<double>(m + 1), "picard_increment", pic.successive_sup[m]});
    }
    report.aggregates["picard_sup_distance"] = sup;
    report.aggregates["picard_contracting"] = pic.contracting;
  }
  report.runs.push_back(std::move(rec));
  print_written(kpp::harness::emit_outputs(report, dir));
  std::cout << "wrote " << (dir / (c.experiment_id + "_pde.csv")).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interacting branching particles and the F-KPP limit"};
  app.require_subcommand(1);
  Overrides o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_file, "key = value config file");
    sub->add_option("--set", o.sets, "override one config key, key=value (repeatable)");
    sub->add_option("--n", o.n, "scale parameter N");
    sub->add_option("--epsilon", o.epsilon, "interaction range, or 'local' for N^{-1/d}");
    sub->add_option("--dim", o.dim, "space dimension")->check(CLI::Range(1, 3));
    sub->add_option("--t-final", o.t_final, "horizon T");
    sub->add_option("--dt", o.dt, "largest particle time step");
    sub->add_option("--delta", o.delta, "smoothing width (replaces study.deltas)");
    sub->add_option("--seed", o.seed, "model seed and master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--id", o.id, "experiment id (file prefix)");
  };

  auto* simulate = app.add_subcommand("simulate", "one particle run");
  add_common(simulate);
  int intervals = 20;
  bool every_step = false;
  bool fields = false;
  bool binary = false;
  bool genealogy = false;
  simulate->add_option("--snapshots", intervals, "number of snapshot intervals on [0, T]")->check(CLI::PositiveNumber);
  simulate->add_flag("--every-step", every_step, "also snapshot after every step");
  simulate->add_flag("--fields", fields, "write smoothed densities (CSV)");
  simulate->add_flag("--binary", binary, "write smoothed densities (binary)");
  simulate->add_flag("--genealogy", genealogy, "write the genealogy as nested groups");

  auto* pde_cmd = app.add_subcommand("pde", "F-KPP reference solve");
  add_common(pde_cmd);
  bool pde_binary = false;
  bool picard = false;
  int iterations = 12;
  pde_cmd->add_option("--snapshots", intervals, "number of output intervals on [0, T]")->check(CLI::PositiveNumber);
  pde_cmd->add_flag("--binary", pde_binary, "also write fields in the binary format");
  pde_cmd->add_flag("--picard", picard, "cross-check against the Picard iteration");
  pde_cmd->add_option("--iterations", iterations, "Picard iterations")->check(CLI::PositiveNumber);

  auto* converge = app.add_subcommand("converge", "convergence study");
  add_common(converge);

  auto* diagnose = app.add_subcommand("diagnose", "diagnostic suite");
  add_common(diagnose);
  std::string suite;
  diagnose->add_option("--suite", suite, "suite name")
      ->required()
      ->check(CLI::IsMember(kpp::harness::suite_names()));

  auto* keys = app.add_subcommand("keys", "list config keys with their defaults");

  CLI11_PARSE(app, argc, argv);

  if (keys->parsed()) {
    const auto defaults = kpp::harness::to_json(kpp::harness::default_config());
    for (const auto& k : kpp::harness::setting_keys()) std::cout << k << " = " << defaults.at(k).dump() << '\n';
    return 0;
  }

  ExperimentConfig config;
  try {
    config = resolve(o);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config, intervals, every_step, fields, binary, genealogy);
    if (pde_cmd->parsed()) return cmd_pde(config, intervals, pde_binary, picard, iterations);
    kpp::harness::ExperimentReport report;
    if (converge->parsed()) report = kpp::harness::run_convergence_study(config);
    if (diagnose->parsed()) report = kpp::harness::run_diagnostics(config, suite);
    print_written(kpp::harness::emit_outputs(report, config.output_dir));
    return print_verdicts(report);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
