#pragma once

// Reference solver for du/dt = (1/2) Laplacian u + u (1 - u) on a box with
// homogeneous Dirichlet data: Strang splitting of the exact logistic flow
// and a Crank-Nicolson heat step. A Picard iteration on the Duhamel form
// provides an independent second solver.

#include "kpp/field.hpp"
#include "kpp/particle_system.hpp"

#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

namespace kpp::pde {

/// Diffusion coefficient of the equation.
inline constexpr double kDiffusion = 0.5;

struct PdeGrid {
  int dim = 1;
  double half_width = 10.0;
  double spacing = 0.05;
  /// Time step; 0 selects the positivity limit h^2 / (D d).
  double dt = 0.0;
  /// Largest value tolerated on the nodes next to the boundary.
  double boundary_tolerance = 1e-6;

  GridSpec spec() const { return symmetric_grid(dim, half_width, spacing); }
  /// Largest step for which the explicit half of Crank-Nicolson keeps
  /// nonnegative data nonnegative.
  double positivity_dt() const { return spacing * spacing / (kDiffusion * dim); }
  double step_limit() const { return dt > 0.0 ? dt : positivity_dt(); }
  void validate() const;
};

class MaximumPrincipleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nodal values of u_0, with the boundary nodes set to zero.
SmoothedField initial_field(const particles::InitialCondition& u0, const GridSpec& grid);
SmoothedField constant_field(const GridSpec& grid, double value);

/// Exact logistic flow u -> u e^dt / (1 + u (e^dt - 1)) at every node.
SmoothedField reaction_step(const SmoothedField& field, double dt);
void reaction_in_place(std::vector<double>& values, double dt);

/// One Crank-Nicolson step of the heat semigroup exp(dt Laplacian / 2) with
/// zero boundary values. The factorization is built once per (grid, dt).
class HeatStep {
 public:
  HeatStep(const GridSpec& grid, double dt);
  ~HeatStep();
  HeatStep(HeatStep&&) noexcept;
  HeatStep& operator=(HeatStep&&) noexcept;

  double dt() const { return dt_; }
  void apply(std::vector<double>& values) const;

 private:
  struct Impl;
  GridSpec grid_;
  double dt_;
  std::unique_ptr<Impl> impl_;
};

SmoothedField diffusion_step(const SmoothedField& field, double dt);

struct PdeSolution {
  std::vector<SmoothedField> fields;  ///< at the requested output times
  double upper_bound = 1.0;           ///< max(1, sup u_0)
  double max_boundary_value = 0.0;
  std::size_t steps = 0;
};

/// Strang splitting (half reaction, heat step, half reaction). Steps land
/// exactly on every output time. Aborts with MaximumPrincipleError when a
/// node leaves [0, max(1, sup u_0)] and with BoundaryError when the
/// solution reaches the boundary.
PdeSolution solve(const SmoothedField& u0, double horizon, const PdeGrid& grid,
                  const std::vector<double>& output_times);

struct PicardResult {
  PdeSolution solution;
  /// sup over nodes and times of |u^(m) - u^(m-1)|, m = 1..iterations.
  std::vector<double> successive_sup;
  bool contracting = true;
};

/// u^(m+1)(t) = S(t) u_0 + int_0^t S(t - s) F(u^(m)(s)) ds with F(u) = u(1 - u),
/// S the Crank-Nicolson heat step and the trapezoid rule in time, starting
/// from u^(0)(t) = S(t) u_0. Output times must lie on the uniform step grid.
PicardResult mild_picard(const SmoothedField& u0, double horizon, const PdeGrid& grid, int iterations,
                         const std::vector<double>& output_times);

/// Largest x with u(x) = level (linear interpolation), d = 1 only; NaN when
/// the field never reaches the level.
double front_position(const SmoothedField& field, double level = 0.5);

}  // namespace kpp::pde
