#pragma once

// Functionals of the normalized empirical measure (1/N) sum_j delta_{x_j(t)}
// over a trajectory: smoothed densities, pair and triple interaction
// statistics, the weak-form residual and space-time norms against fields.
// Time integrals use the left Riemann rule on the snapshot times.

#include "kpp/field.hpp"
#include "kpp/kernels.hpp"
#include "kpp/particle_system.hpp"

#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace kpp::empirical {

using particles::ParticleConfiguration;
using SpaceTimeFunction = std::function<double(double t, std::span<const double> x)>;

/// f(t, x) together with a radius beyond which it vanishes (infinity when
/// it does not), which decides between a cell-list and an all-pairs sum.
struct PairKernel {
  SpaceTimeFunction f;
  double support = std::numeric_limits<double>::infinity();
};

PairKernel interaction_kernel(const kernels::RescaledKernel& theta);
PairKernel constant_kernel(double c);

/// Symmetric grid of half width R + 4 sqrt(T) + 1 and spacing delta / 4.
GridSpec default_field_grid(int dim, double radius, double horizon, double delta);

/// f^delta(x) = (1/N) sum_j eta^delta(x - x_j) at the grid nodes, gathered
/// per node through a cell list of edge delta.
SmoothedField smooth_density(const ParticleConfiguration& config, const kernels::SmoothingBump& bump,
                             const GridSpec& grid);
/// Direct double loop over nodes and particles.
SmoothedField smooth_density_reference(const ParticleConfiguration& config, const kernels::SmoothingBump& bump,
                                       const GridSpec& grid);

/// w_i = t_{i+1} - t_i with t_{m} = horizon.
std::vector<double> riemann_weights(std::span<const double> times, double horizon);
std::vector<double> snapshot_times(std::span<const ParticleConfiguration> snapshots);

/// out_j = sum_k f(t, x_j - x_k) w_k over all particles k (self included).
std::vector<double> neighbour_sums(const Positions& positions, const PairKernel& f, double t,
                                   std::span<const double> weights = {});

/// int_0^T (1/N^2) sum_{j,k} f(x_j - x_k) phi(t, x_j) dt.
double pair_statistic(std::span<const ParticleConfiguration> snapshots, const PairKernel& f,
                      const SpaceTimeFunction& phi, double horizon);

/// int_0^T (1/N^3) sum_{i,j,k} f(x_j - x_i) g(x_j - x_k) |phi|(t, x_i) |psi|(t, x_j) dt.
double triple_statistic(std::span<const ParticleConfiguration> snapshots, const PairKernel& f, const PairKernel& g,
                        const SpaceTimeFunction& phi, const SpaceTimeFunction& psi, double horizon);

struct TestFunction {
  SpaceTimeFunction value;
  SpaceTimeFunction time_derivative;
  SpaceTimeFunction laplacian;
  /// phi(t, .) vanishes outside the ball of this radius.
  double support_radius = 1.0;
};

/// phi(t, x) = (T - t) (1 - |x|^2 / a^2)^4_+ with exact derivatives.
TestFunction polynomial_test_function(int dim, double a, double horizon);

struct WeakFormTerms {
  double initial = 0.0;      ///< int phi(0, .) u_0
  double drift = 0.0;        ///< int <xi_t, (d/dt + Laplacian/2 + 1) phi> dt
  double interaction = 0.0;  ///< pair statistic with theta_eps and phi
  double residual = 0.0;     ///< initial + drift - interaction
};

/// Rejects test functions with phi(T, .) != 0. With include_self = false
/// the k = j terms are dropped from the interaction, matching dynamics run
/// without the self term.
WeakFormTerms weak_form_residual(std::span<const ParticleConfiguration> snapshots, const TestFunction& phi,
                                 const particles::InitialCondition& u0, const kernels::RescaledKernel& theta,
                                 double horizon, bool include_self = true);

/// int_0^T int |f - u| dx dt, grid quadrature, left Riemann in time.
double l1_space_time_error(std::span<const SmoothedField> fields, std::span<const SmoothedField> reference,
                           double horizon);

struct DensityExcess {
  double excess = 0.0;  ///< int_0^T int f 1{f > k} dx dt
  double max_value = 0.0;
};

DensityExcess density_excess(std::span<const SmoothedField> fields, double k, double horizon);

}  // namespace kpp::empirical
