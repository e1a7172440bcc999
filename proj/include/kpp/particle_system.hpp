#pragma once

// Interacting branching Brownian particles: every particle diffuses with
// generator (1/2)Laplacian, gives birth at unit rate to a child placed on
// itself, and dies at rate D_j = (1/N) sum_k theta_eps(x_j - x_k).

#include "kpp/geometry.hpp"
#include "kpp/kernels.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpp::particles {

enum class RateVariant {
  unclamped,  ///< birth rate 1, death rate D_j
  clamped,    ///< birth rate (1 - D_j)^+, no death
};

enum class SteppingScheme {
  /// Rates frozen over the step; every label runs exponential birth and
  /// death clocks, so births and deaths within the step are exact for the
  /// frozen rates.
  tau_leap,
  /// At most one birth trial and one death trial per particle and step.
  bernoulli_leap,
  /// Proposals at a global rate bound, interaction sums updated after each
  /// accepted event. Rates see start-of-step positions; motion still
  /// follows the branching tree within the step.
  thinning,
};

/// What drives deaths. `constant` and `none` replace the interaction field
/// and exist for calibration against exactly solvable processes.
enum class DeathModel { interaction, constant, none };

RateVariant parse_rate_variant(const std::string& name);
SteppingScheme parse_stepping_scheme(const std::string& name);
std::string to_string(RateVariant v);
std::string to_string(SteppingScheme s);

struct ModelParameters {
  std::int64_t n_scale = 1000;
  int dim = 1;
  /// Interaction range; empty means the local rule eps = N^{-1/d}.
  std::optional<double> eps;
  double horizon = 1.0;
  /// Upper bound on the time step.
  double dt = 0.05;
  /// Shrink steps so that max_rate * dt <= rate_dt_target.
  bool adaptive_dt = true;
  double rate_dt_target = 0.1;
  RateVariant rate_variant = RateVariant::unclamped;
  SteppingScheme scheme = SteppingScheme::tau_leap;
  std::uint64_t seed = 1;
  bool include_self = true;
  double explosion_factor = 10.0;
  kernels::MollifierShape mollifier = kernels::MollifierShape::polynomial_bump;
  double support_radius = 1.0;

  bool births = true;
  bool motion = true;
  DeathModel deaths = DeathModel::interaction;
  double constant_death_rate = 0.0;

  double resolved_eps() const;
  /// eps^{-d} / N, the constant C in eps^{-d} <= C N.
  double density_constant() const;
  kernels::RescaledKernel kernel() const;
  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
};

enum class InitialShape {
  indicator,  ///< gamma on the ball of radius R
  bump,       ///< gamma (1 - |x|^2/R^2)^2 on the ball of radius R
};

InitialShape parse_initial_shape(const std::string& name);

struct InitialCondition {
  int dim = 1;
  InitialShape shape = InitialShape::indicator;
  /// Bound gamma; also the peak value.
  double height = 0.5;
  double radius = 1.0;

  double operator()(std::span<const double> x) const;
  double mass() const;
  double bound() const { return height; }
};

enum class RecordEnd : std::uint8_t { alive, branched, died };

/// One segment of a lineage: a particle label between its birth and the
/// moment it branches (and is continued by two new labels) or dies.
struct GenealogyRecord {
  std::int64_t parent = -1;
  std::uint32_t progenitor = 0;  ///< a_1, starting from 1
  std::uint8_t digit = 0;        ///< last label digit, 0 for a progenitor
  std::uint32_t depth = 1;       ///< label length n(a)
  double birth_time = 0.0;
  double end_time = std::numeric_limits<double>::infinity();
  RecordEnd end = RecordEnd::alive;
};

/// Append-only table of all labels ever used in a run.
class Genealogy {
 public:
  std::uint32_t add_progenitor(std::uint32_t progenitor, double time);
  /// Closes `record` and opens its two continuations (digit 1 for the
  /// parent, digit 2 for the child). Returns {parent continuation, child}.
  std::pair<std::uint32_t, std::uint32_t> branch(std::uint32_t record, double time);
  void kill(std::uint32_t record, double time);

  const GenealogyRecord& operator[](std::uint32_t r) const { return records_.at(r); }
  std::size_t size() const { return records_.size(); }
  const std::vector<GenealogyRecord>& records() const { return records_; }

  /// Label digits (a_1, ..., a_n).
  std::vector<std::uint32_t> digits(std::uint32_t record) const;
  /// Dotted label, e.g. "7.1.2".
  std::string label(std::uint32_t record) const;

 private:
  std::vector<GenealogyRecord> records_;
};

/// Alive particles at one instant. Dead particles are removed.
struct ParticleConfiguration {
  Positions positions;
  std::vector<std::uint32_t> records;  ///< genealogy record per particle
  std::vector<std::uint64_t> keys;     ///< RNG key per particle, a hash of its label
  std::shared_ptr<Genealogy> genealogy;
  double time = 0.0;
  std::int64_t n_scale = 1;
  double eps = 1.0;

  std::size_t size() const { return records.size(); }
  int dim() const { return positions.dim; }
  std::string label(std::size_t i) const { return genealogy->label(records[i]); }
};

/// Per-label RNG key: progenitors hash their index, children hash
/// (parent key, digit).
std::uint64_t progenitor_key(std::uint32_t progenitor);
std::uint64_t child_key(std::uint64_t parent_key, std::uint32_t digit);

/// N_0 = round(N * mass) i.i.d. points with density u_0 / mass (none when u_0 = 0), drawn by
/// rejection from [-R, R]^d. Labels are 1..N_0.
ParticleConfiguration sample_initial(const InitialCondition& ic, const ModelParameters& params,
                                     std::int64_t max_proposals_per_point = 100000);

/// Configuration with the given points, labelled 1..n, at time 0.
ParticleConfiguration make_configuration(Positions positions, const ModelParameters& params);

struct EventRates {
  std::vector<double> birth;
  std::vector<double> death;
  /// max_j (birth_j + death_j), 0 for an empty configuration.
  double max_total = 0.0;
};

/// D_j for the current positions (self term per params.include_self).
std::vector<double> death_rates(const ParticleConfiguration& config, const ModelParameters& params);
/// Birth and death rates after applying the rate variant and the switches.
EventRates event_rates(const ParticleConfiguration& config, const ModelParameters& params);

class ExplosionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  std::uint64_t step = 0;
  double time = 0.0;  ///< clock after the step
  double dt = 0.0;
  std::size_t population = 0;
  std::size_t births = 0;
  std::size_t deaths = 0;
  /// Largest total event rate seen during the step.
  double max_rate = 0.0;
};

/// Advances `config` by dt. Draws depend only on (seed, step_index, label),
/// so the result does not depend on the number of threads. dt = 0 is the
/// identity; dt < 0 is rejected.
StepRecord step(ParticleConfiguration& config, const ModelParameters& params, std::uint64_t step_index,
                double dt);

struct RunReport {
  std::size_t initial_population = 0;
  std::vector<StepRecord> steps;
  std::vector<double> snapshot_times;
};

struct Trajectory {
  std::vector<ParticleConfiguration> snapshots;
  RunReport report;
};

using SnapshotObserver = std::function<void(const ParticleConfiguration&)>;

/// Runs to params.horizon, landing exactly on every snapshot time (sorted,
/// inside [0, T]). With `every_step` the observer also sees each step.
RunReport run(ParticleConfiguration config, const ModelParameters& params, const std::vector<double>& snapshot_times,
              const SnapshotObserver& observer, bool every_step = false);

/// As above, but keeps deep copies of the snapshots.
Trajectory run(const ParticleConfiguration& config, const ModelParameters& params,
               const std::vector<double>& snapshot_times, bool every_step = false);

/// Evenly spaced times 0, T/m, ..., T.
std::vector<double> uniform_times(double horizon, int intervals);

/// Columns: time,particle_id,lineage,x1[,x2[,x3]]. particle_id is the
/// genealogy record index, which is unique within a run.
void write_snapshot_csv_header(std::ostream& out, int dim);
void write_snapshot_csv(std::ostream& out, const ParticleConfiguration& config);

}  // namespace kpp::particles
