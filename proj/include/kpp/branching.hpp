#pragma once

// Pure proliferation (Yule) and binary branching Brownian motion with unit
// branching rate, simulated exactly: event times are exponential, and the
// Brownian displacement between events is drawn for the exact elapsed time.

#include "kpp/geometry.hpp"
#include "kpp/particle_system.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace kpp::branching {

enum class InitialLaw {
  point,    ///< every progenitor starts at `origin`
  density,  ///< i.i.d. with density u_0 / int u_0
};

struct BranchingRunSpec {
  int dim = 1;
  std::size_t initial_count = 1;
  InitialLaw law = InitialLaw::point;
  std::vector<double> origin;  ///< defaults to 0 when empty
  particles::InitialCondition density;
  double horizon = 1.0;
  bool motion = true;
  std::uint64_t seed = 1;
  std::size_t population_cap = 1'000'000;
  /// Keep the genealogy table; off for bulk replicate counting.
  bool record_genealogy = true;

  void validate() const;
};

class PopulationCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct YuleRun {
  /// Branch times in increasing order; population after event i is
  /// initial_count + i + 1.
  std::vector<double> event_times;
  std::size_t initial_count = 0;
  std::shared_ptr<particles::Genealogy> genealogy;

  std::size_t population_at(double t) const;
  std::size_t final_population() const { return initial_count + event_times.size(); }
};

/// One replicate; replicates with different indices use independent streams.
YuleRun simulate_yule(const BranchingRunSpec& spec, std::uint64_t replicate = 0);

/// Population at the horizon only (no event list, no genealogy).
std::size_t yule_population(const BranchingRunSpec& spec, std::uint64_t replicate);

struct BbmSnapshot {
  double time = 0.0;
  Positions positions;
  std::vector<std::uint32_t> records;
};

struct BbmRun {
  std::vector<BbmSnapshot> snapshots;
  std::shared_ptr<particles::Genealogy> genealogy;
  std::size_t events = 0;
};

/// Positions at the requested (sorted) times in [0, T]. With motion off the
/// positions stay at their initial values.
BbmRun simulate_bbm(const BranchingRunSpec& spec, const std::vector<double>& times, std::uint64_t replicate = 0);

using PointFunction = std::function<double(std::span<const double>)>;

struct OccupationEstimate {
  double mean = 0.0;
  double se = 0.0;
};

/// E Z(t, x, delta): BBM particles inside the closed ball B(x, delta) at t,
/// from one progenitor with law u_0 / int u_0 (spec.density).
OccupationEstimate occupation_statistic(const BranchingRunSpec& spec, double t, std::span<const double> x,
                                        double delta, std::size_t replicates);

struct DensityConstant {
  double k1 = 0.0;     ///< max over the grid of delta^{-d} E Z
  double k = 0.0;      ///< max(2 gamma, 2 k1 ||eta||_inf / int u_0)
  double t_at = 0.0;   ///< maximizer
  double delta_at = 0.0;
  std::vector<double> x_at;
};

/// Estimates k_1 over the grid times x points x deltas, sharing replicates
/// across grid cells.
DensityConstant density_constant(const BranchingRunSpec& spec, const std::vector<double>& times,
                                 const std::vector<std::vector<double>>& points, const std::vector<double>& deltas,
                                 std::size_t replicates, double eta_sup);

struct BoundedFunction {
  PointFunction f;
  double sup = 0.0;       ///< ||f||_inf
  double half_width = 0;  ///< box [-L, L]^d containing the relevant support
};

struct MomentCheck {
  double double_mean = 0.0;
  double double_se = 0.0;
  double triple_mean = 0.0;
  double triple_se = 0.0;
  std::vector<double> double_samples;
  std::vector<double> triple_samples;
};

/// Monte Carlo E sum_{i,j} f(x_i - x_j) and E sum_{i,j,k} f(x_i - x_j) g(x_j - x_k)
/// at the horizon, for spec.initial_count progenitors drawn from spec.density.
/// Replicates first_replicate, ..., first_replicate + replicates - 1.
MomentCheck moment_sums(const BoundedFunction& f, const BoundedFunction& g, const BranchingRunSpec& spec,
                        std::size_t replicates, std::uint64_t first_replicate = 0);

/// Structural right-hand sides for given decay constant c, with
/// C_T = e^T, N = N_0 / int u_0 and gamma, R from spec.density.
double double_sum_bound(const BoundedFunction& f, const BranchingRunSpec& spec, double c);
double triple_sum_bound(const BoundedFunction& f, const BoundedFunction& g, const BranchingRunSpec& spec, double c);

/// int over [-L, L]^d of h(x) exp(-c |x|), by composite Gauss-Legendre.
double weighted_integral(const PointFunction& h, int dim, double half_width, double c);

/// One line per progenitor: nested (child,child)label:birth-end groups,
/// a trailing 'd' on records that died, e.g. "(1.1:0.4-1,1.2:0.4-1)1:0-0.4;".
void write_newick(std::ostream& out, const particles::Genealogy& genealogy, double horizon);

}  // namespace kpp::branching
