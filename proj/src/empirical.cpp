#include "kpp/empirical.hpp"

#include "kpp/quadrature.hpp"
#include "kpp/spatial_index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace kpp::empirical {

namespace {

constexpr double kTimeMatch = 1e-9;

double sum_in_order(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

void check_grid(const GridSpec& grid, int dim) {
  grid.validate();
  if (grid.dim != dim) throw std::invalid_argument("field grid dimension does not match the configuration");
}

double clipped_mass(const ParticleConfiguration& config, const GridSpec& grid, double reach) {
  std::size_t out = 0;
  for (std::size_t j = 0; j < config.size(); ++j) {
    const auto x = config.positions[j];
    for (int a = 0; a < grid.dim; ++a) {
      if (x[a] - reach < grid.origin[a] || x[a] + reach > grid.upper(a)) {
        ++out;
        break;
      }
    }
  }
  return static_cast<double>(out) / static_cast<double>(config.n_scale);
}

}  // namespace

PairKernel interaction_kernel(const kernels::RescaledKernel& theta) {
  return {[theta](double, std::span<const double> x) { return theta(x); }, theta.support_radius()};
}

PairKernel constant_kernel(double c) {
  return {[c](double, std::span<const double>) { return c; }, std::numeric_limits<double>::infinity()};
}

GridSpec default_field_grid(int dim, double radius, double horizon, double delta) {
  return symmetric_grid(dim, radius + 4.0 * std::sqrt(horizon) + 1.0, 0.25 * delta);
}

SmoothedField smooth_density(const ParticleConfiguration& config, const kernels::SmoothingBump& bump,
                             const GridSpec& grid) {
  check_grid(grid, config.dim());
  SmoothedField field(grid, config.time);
  if (config.size() == 0) return field;
  const auto index = spatial::CellGrid::build(config.positions, bump.support_radius());
  const double inv_n = 1.0 / static_cast<double>(config.n_scale);
  const int d = grid.dim;
  const std::size_t nodes = grid.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nodes; ++i) {
    std::array<double, 3> x{};
    std::array<double, 3> diff{};
    grid.node(i, x);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(d));
    const std::span<const double> ds(diff.data(), static_cast<std::size_t>(d));
    double s = 0.0;
    index.for_each_slot_range(xs, [&](std::uint32_t b, std::uint32_t e) {
      for (std::uint32_t p = b; p < e; ++p) {
        const auto y = index.sorted_position(p);
        for (int a = 0; a < d; ++a) diff[a] = x[a] - y[a];
        s += bump(ds);
      }
    });
    field.values[i] = s * inv_n;
  }
  field.clipped_mass = clipped_mass(config, grid, bump.support_radius());
  return field;
}

SmoothedField smooth_density_reference(const ParticleConfiguration& config, const kernels::SmoothingBump& bump,
                                       const GridSpec& grid) {
  check_grid(grid, config.dim());
  SmoothedField field(grid, config.time);
  const double inv_n = 1.0 / static_cast<double>(config.n_scale);
  const int d = grid.dim;
  std::array<double, 3> x{};
  std::array<double, 3> diff{};
  const std::span<const double> ds(diff.data(), static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.node(i, x);
    double s = 0.0;
    for (std::size_t k = 0; k < config.size(); ++k) {
      const auto y = config.positions[k];
      for (int a = 0; a < d; ++a) diff[a] = x[a] - y[a];
      s += bump(ds);
    }
    field.values[i] = s * inv_n;
  }
  field.clipped_mass = clipped_mass(config, grid, bump.support_radius());
  return field;
}

std::vector<double> riemann_weights(std::span<const double> times, double horizon) {
  std::vector<double> w(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double next = i + 1 < times.size() ? times[i + 1] : horizon;
    if (next < times[i] - kTimeMatch) throw std::invalid_argument("snapshot times must be sorted and <= horizon");
    w[i] = std::max(0.0, next - times[i]);
  }
  return w;
}

std::vector<double> snapshot_times(std::span<const ParticleConfiguration> snapshots) {
  std::vector<double> t;
  t.reserve(snapshots.size());
  for (const auto& s : snapshots) t.push_back(s.time);
  return t;
}

std::vector<double> neighbour_sums(const Positions& positions, const PairKernel& f, double t,
                                   std::span<const double> weights) {
  const std::size_t n = positions.size();
  if (!weights.empty() && weights.size() != n) throw std::invalid_argument("neighbour sums: weight count mismatch");
  const int d = positions.dim;
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  auto weight = [&](std::size_t k) { return weights.empty() ? 1.0 : weights[k]; };
  if (std::isfinite(f.support)) {
    if (!(f.support > 0.0)) throw std::invalid_argument("pair kernel support must be positive");
    const auto grid = spatial::CellGrid::build(positions, f.support);
#pragma omp parallel for schedule(static)
    for (std::size_t j = 0; j < n; ++j) {
      std::array<double, 3> diff{};
      const std::span<const double> ds(diff.data(), static_cast<std::size_t>(d));
      const auto xj = positions[j];
      double s = 0.0;
      grid.for_each_candidate(xj, [&](std::uint32_t k) {
        const auto xk = positions[k];
        for (int a = 0; a < d; ++a) diff[a] = xj[a] - xk[a];
        s += f.f(t, ds) * weight(k);
      });
      out[j] = s;
    }
  } else {
#pragma omp parallel for schedule(static)
    for (std::size_t j = 0; j < n; ++j) {
      std::array<double, 3> diff{};
      const std::span<const double> ds(diff.data(), static_cast<std::size_t>(d));
      const auto xj = positions[j];
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const auto xk = positions[k];
        for (int a = 0; a < d; ++a) diff[a] = xj[a] - xk[a];
        s += f.f(t, ds) * weight(k);
      }
      out[j] = s;
    }
  }
  return out;
}

double pair_statistic(std::span<const ParticleConfiguration> snapshots, const PairKernel& f,
                      const SpaceTimeFunction& phi, double horizon) {
  const auto times = snapshot_times(snapshots);
  const auto w = riemann_weights(times, horizon);
  double total = 0.0;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& c = snapshots[i];
    if (w[i] == 0.0 || c.size() == 0) continue;
    const auto sums = neighbour_sums(c.positions, f, c.time);
    std::vector<double> terms(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) terms[j] = sums[j] * phi(c.time, c.positions[j]);
    const double n = static_cast<double>(c.n_scale);
    total += w[i] * sum_in_order(terms) / (n * n);
  }
  return total;
}

double triple_statistic(std::span<const ParticleConfiguration> snapshots, const PairKernel& f, const PairKernel& g,
                        const SpaceTimeFunction& phi, const SpaceTimeFunction& psi, double horizon) {
  const auto times = snapshot_times(snapshots);
  const auto w = riemann_weights(times, horizon);
  double total = 0.0;
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& c = snapshots[i];
    if (w[i] == 0.0 || c.size() == 0) continue;
    std::vector<double> phi_abs(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) phi_abs[k] = std::abs(phi(c.time, c.positions[k]));
    const auto a = neighbour_sums(c.positions, f, c.time, phi_abs);
    const auto b = neighbour_sums(c.positions, g, c.time);
    std::vector<double> terms(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) terms[j] = std::abs(psi(c.time, c.positions[j])) * a[j] * b[j];
    const double n = static_cast<double>(c.n_scale);
    total += w[i] * sum_in_order(terms) / (n * n * n);
  }
  return total;
}

TestFunction polynomial_test_function(int dim, double a, double horizon) {
  if (!(a > 0.0)) throw std::invalid_argument("test function radius must be positive");
  const double a2 = a * a;
  auto profile = [a2](std::span<const double> x, double& s, double& w) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    s = r2 / a2;
    w = 1.0 - s;
    return w > 0.0;
  };
  TestFunction tf;
  tf.support_radius = a;
  tf.value = [=](double t, std::span<const double> x) {
    double s = 0.0;
    double w = 0.0;
    if (!profile(x, s, w)) return 0.0;
    return (horizon - t) * w * w * w * w;
  };
  tf.time_derivative = [=](double, std::span<const double> x) {
    double s = 0.0;
    double w = 0.0;
    if (!profile(x, s, w)) return 0.0;
    return -(w * w * w * w);
  };
  tf.laplacian = [=](double t, std::span<const double> x) {
    double s = 0.0;
    double w = 0.0;
    if (!profile(x, s, w)) return 0.0;
    return (horizon - t) * (w * w / a2) * (-8.0 * dim * w + 48.0 * s);
  };
  return tf;
}

WeakFormTerms weak_form_residual(std::span<const ParticleConfiguration> snapshots, const TestFunction& phi,
                                 const particles::InitialCondition& u0, const kernels::RescaledKernel& theta,
                                 double horizon, bool include_self) {
  const int d = u0.dim;
  // Terminal constraint, sampled over the support box and at the final positions.
  {
    const int per_axis = 21;
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= per_axis;
    std::array<double, 3> x{};
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(d));
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      for (int a = 0; a < d; ++a) {
        x[a] = phi.support_radius * (2.0 * static_cast<double>(rem % per_axis) / (per_axis - 1) - 1.0);
        rem /= per_axis;
      }
      if (std::abs(phi.value(horizon, xs)) > 1e-12) {
        throw std::invalid_argument("weak form: test function must vanish at the terminal time");
      }
    }
    if (!snapshots.empty()) {
      const auto& last = snapshots.back();
      for (std::size_t j = 0; j < last.size(); ++j) {
        if (std::abs(phi.value(horizon, last.positions[j])) > 1e-12) {
          throw std::invalid_argument("weak form: test function must vanish at the terminal time");
        }
      }
    }
  }

  WeakFormTerms terms;
  if (u0.height != 0.0) {
    const int panels = d == 1 ? 64 : (d == 2 ? 128 : 32);
    terms.initial = quad::box_integral(
        [&](std::span<const double> x) { return phi.value(0.0, x) * u0(x); }, d, u0.radius, panels, d == 1 ? 8 : 4);
  }

  const auto times = snapshot_times(snapshots);
  const auto w = riemann_weights(times, horizon);
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    const auto& c = snapshots[i];
    if (w[i] == 0.0 || c.size() == 0) continue;
    std::vector<double> gen(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) {
      const auto x = c.positions[j];
      gen[j] = phi.time_derivative(c.time, x) + 0.5 * phi.laplacian(c.time, x) + phi.value(c.time, x);
    }
    terms.drift += w[i] * sum_in_order(gen) / static_cast<double>(c.n_scale);
  }

  terms.interaction = pair_statistic(snapshots, interaction_kernel(theta), phi.value, horizon);
  if (!include_self) {
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
      const auto& c = snapshots[i];
      if (w[i] == 0.0 || c.size() == 0) continue;
      std::vector<double> v(c.size());
      for (std::size_t j = 0; j < c.size(); ++j) v[j] = phi.value(c.time, c.positions[j]);
      const double n = static_cast<double>(c.n_scale);
      terms.interaction -= w[i] * theta.peak() * sum_in_order(v) / (n * n);
    }
  }
  terms.residual = terms.initial + terms.drift - terms.interaction;
  return terms;
}

double l1_space_time_error(std::span<const SmoothedField> fields, std::span<const SmoothedField> reference,
                           double horizon) {
  if (fields.size() != reference.size()) throw std::invalid_argument("L1 error: different numbers of time slices");
  std::vector<double> times;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (!fields[i].grid.same_as(reference[i].grid)) throw std::invalid_argument("L1 error: grid mismatch");
    if (std::abs(fields[i].time - reference[i].time) > kTimeMatch) throw std::invalid_argument("L1 error: time mismatch");
    times.push_back(fields[i].time);
  }
  const auto w = riemann_weights(times, horizon);
  double total = 0.0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    double s = 0.0;
    const auto& f = fields[i].values;
    const auto& u = reference[i].values;
    for (std::size_t k = 0; k < f.size(); ++k) s += std::abs(f[k] - u[k]);
    total += w[i] * s * fields[i].grid.cell_volume();
  }
  return total;
}

DensityExcess density_excess(std::span<const SmoothedField> fields, double k, double horizon) {
  if (!(k > 0.0)) throw std::invalid_argument("density excess: threshold must be positive");
  std::vector<double> times;
  for (const auto& f : fields) times.push_back(f.time);
  const auto w = riemann_weights(times, horizon);
  DensityExcess out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    double s = 0.0;
    for (double v : fields[i].values) {
      if (v > k) s += v;
      out.max_value = std::max(out.max_value, v);
    }
    out.excess += w[i] * s * fields[i].grid.cell_volume();
  }
  return out;
}

}  // namespace kpp::empirical
