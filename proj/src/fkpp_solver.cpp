#include "kpp/fkpp_solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kpp::pde {

namespace {

constexpr double kTimeMatch = 1e-9;
constexpr double kRounding = 1e-12;

bool on_boundary(const GridSpec& g, const std::array<std::int64_t, 3>& ijk) {
  for (int a = 0; a < g.dim; ++a) {
    if (ijk[a] == 0 || ijk[a] == g.counts[a] - 1) return true;
  }
  return false;
}

bool next_to_boundary(const GridSpec& g, const std::array<std::int64_t, 3>& ijk) {
  for (int a = 0; a < g.dim; ++a) {
    if (ijk[a] <= 1 || ijk[a] >= g.counts[a] - 2) return true;
  }
  return false;
}

void zero_boundary(SmoothedField& f) {
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    if (on_boundary(f.grid, f.grid.unflatten(i))) f.values[i] = 0.0;
  }
}

// Tolerates rounding below zero and above the bound, and clips it away.
void enforce_maximum_principle(std::vector<double>& v, double upper, double t) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i];
    if (!(x >= -kRounding && x <= upper * (1.0 + kRounding))) {
      std::ostringstream msg;
      msg << "maximum principle violated at node " << i << ", t = " << t << ": u = " << x << " outside [0, " << upper
          << "]";
      throw MaximumPrincipleError(msg.str());
    }
    v[i] = std::clamp(x, 0.0, upper);
  }
}

double boundary_layer_max(const SmoothedField& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const auto ijk = f.grid.unflatten(i);
    if (!on_boundary(f.grid, ijk) && next_to_boundary(f.grid, ijk)) m = std::max(m, std::abs(f.values[i]));
  }
  return m;
}

// Splits [0, T] into steps of at most dt_max that land on every output time.
std::vector<double> step_times(double horizon, double dt_max, const std::vector<double>& outputs) {
  std::vector<double> stops{0.0};
  for (double t : outputs) {
    if (t < -kTimeMatch || t > horizon + kTimeMatch) throw std::invalid_argument("output time outside [0, T]");
    if (t > stops.back() + kTimeMatch) stops.push_back(t);
  }
  if (horizon > stops.back() + kTimeMatch) stops.push_back(horizon);
  std::vector<double> times{0.0};
  for (std::size_t i = 1; i < stops.size(); ++i) {
    const double span = stops[i] - stops[i - 1];
    const auto n = static_cast<std::int64_t>(std::ceil(span / dt_max - 1e-9));
    for (std::int64_t k = 1; k < n; ++k) times.push_back(stops[i - 1] + span * static_cast<double>(k) / n);
    times.push_back(stops[i]);
  }
  return times;
}

}  // namespace

void PdeGrid::validate() const {
  if (dim < 1 || dim > 2) throw std::invalid_argument("PDE solver supports d = 1 and d = 2");
  if (!(half_width > 0.0) || !(spacing > 0.0)) throw std::invalid_argument("PDE grid: positive sizes required");
  if (half_width < 3.0 * spacing) throw std::invalid_argument("PDE grid: box narrower than three cells");
  if (dt < 0.0) throw std::invalid_argument("PDE grid: negative time step");
}

SmoothedField initial_field(const particles::InitialCondition& u0, const GridSpec& grid) {
  if (u0.dim != grid.dim) throw std::invalid_argument("initial field: dimension mismatch");
  SmoothedField f(grid, 0.0);
  double x[3];
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    grid.node(i, {x, 3});
    f.values[i] = u0(std::span<const double>(x, static_cast<std::size_t>(grid.dim)));
  }
  zero_boundary(f);
  return f;
}

SmoothedField constant_field(const GridSpec& grid, double value) {
  SmoothedField f(grid, 0.0);
  std::fill(f.values.begin(), f.values.end(), value);
  return f;
}

void reaction_in_place(std::vector<double>& values, double dt) {
  const double e = std::expm1(dt);
  for (double& u : values) u = u * (1.0 + e) / (1.0 + u * e);
}

SmoothedField reaction_step(const SmoothedField& field, double dt) {
  SmoothedField out = field;
  reaction_in_place(out.values, dt);
  out.time = field.time + dt;
  return out;
}

struct HeatStep::Impl {
  // d = 1: constant tridiagonal system, factored once (Thomas algorithm).
  std::vector<double> c_prime;
  std::vector<double> denom;
  // d = 2: sparse symmetric positive definite system on interior nodes.
  Eigen::SparseMatrix<double> lhs;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  std::vector<std::size_t> interior;  // grid index of each unknown
  std::vector<std::int64_t> unknown;  // unknown index of each grid node, -1 on the boundary
  double alpha = 0.0;
};

HeatStep::HeatStep(const GridSpec& grid, double dt) : grid_(grid), dt_(dt), impl_(std::make_unique<Impl>()) {
  grid.validate();
  if (grid.dim > 2) throw std::invalid_argument("heat step supports d = 1 and d = 2");
  if (!(dt > 0.0)) throw std::invalid_argument("heat step needs dt > 0");
  Impl& m = *impl_;
  m.alpha = kDiffusion * dt / (2.0 * grid.spacing * grid.spacing);
  const double a = m.alpha;
  if (grid.dim == 1) {
    const std::int64_t n = grid.counts[0] - 2;
    if (n < 1) throw std::invalid_argument("heat step: no interior nodes");
    m.c_prime.resize(static_cast<std::size_t>(n));
    m.denom.resize(static_cast<std::size_t>(n));
    const double b = 1.0 + 2.0 * a;
    const double c = -a;
    double prev_c = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double den = b - (i > 0 ? c * prev_c : 0.0);
      m.denom[static_cast<std::size_t>(i)] = den;
      prev_c = c / den;
      m.c_prime[static_cast<std::size_t>(i)] = prev_c;
    }
    return;
  }
  m.unknown.assign(grid.size(), -1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!on_boundary(grid, grid.unflatten(i))) {
      m.unknown[i] = static_cast<std::int64_t>(m.interior.size());
      m.interior.push_back(i);
    }
  }
  const auto n = static_cast<Eigen::Index>(m.interior.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.interior.size() * 5);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto ijk = grid.unflatten(m.interior[static_cast<std::size_t>(r)]);
    trip.emplace_back(r, r, 1.0 + 4.0 * a);
    for (int ax = 0; ax < 2; ++ax) {
      for (int s : {-1, 1}) {
        auto nb = ijk;
        nb[ax] += s;
        const std::int64_t u = m.unknown[grid.flatten(nb)];
        if (u >= 0) trip.emplace_back(r, static_cast<Eigen::Index>(u), -a);
      }
    }
  }
  m.lhs.resize(n, n);
  m.lhs.setFromTriplets(trip.begin(), trip.end());
  m.ldlt.compute(m.lhs);
  if (m.ldlt.info() != Eigen::Success) throw std::runtime_error("heat step: sparse factorization failed");
}

HeatStep::~HeatStep() = default;
HeatStep::HeatStep(HeatStep&&) noexcept = default;
HeatStep& HeatStep::operator=(HeatStep&&) noexcept = default;

void HeatStep::apply(std::vector<double>& v) const {
  if (v.size() != grid_.size()) throw std::invalid_argument("heat step: field size mismatch");
  const Impl& m = *impl_;
  const double a = m.alpha;
  if (grid_.dim == 1) {
    const std::size_t total = v.size();
    const std::size_t n = total - 2;
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t g = i + 1;
      rhs[i] = (1.0 - 2.0 * a) * v[g] + a * (v[g - 1] + v[g + 1]);
    }
    // Forward sweep then back substitution; the sub-diagonal is -a.
    std::vector<double> d_prime(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double prev = i > 0 ? d_prime[i - 1] : 0.0;
      d_prime[i] = (rhs[i] + (i > 0 ? a * prev : 0.0)) / m.denom[i];
    }
    for (std::size_t i = n; i-- > 0;) {
      const double next = i + 1 < n ? v[i + 2] : 0.0;
      v[i + 1] = d_prime[i] - m.c_prime[i] * next;
    }
    v.front() = 0.0;
    v.back() = 0.0;
    return;
  }
  const auto n = static_cast<Eigen::Index>(m.interior.size());
  Eigen::VectorXd rhs(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t gi = m.interior[static_cast<std::size_t>(r)];
    const auto ijk = grid_.unflatten(gi);
    double s = (1.0 - 4.0 * a) * v[gi];
    for (int ax = 0; ax < 2; ++ax) {
      for (int sg : {-1, 1}) {
        auto nb = ijk;
        nb[ax] += sg;
        s += a * v[grid_.flatten(nb)];
      }
    }
    rhs[r] = s;
  }
  const Eigen::VectorXd sol = m.ldlt.solve(rhs);
  if (m.ldlt.info() != Eigen::Success) throw std::runtime_error("heat step: linear solve failed");
  std::fill(v.begin(), v.end(), 0.0);
  for (Eigen::Index r = 0; r < n; ++r) v[m.interior[static_cast<std::size_t>(r)]] = sol[r];
}

SmoothedField diffusion_step(const SmoothedField& field, double dt) {
  SmoothedField out = field;
  HeatStep(field.grid, dt).apply(out.values);
  out.time = field.time + dt;
  return out;
}

PdeSolution solve(const SmoothedField& u0, double horizon, const PdeGrid& grid,
                  const std::vector<double>& output_times) {
  grid.validate();
  if (!(horizon >= 0.0)) throw std::invalid_argument("solve: horizon must be >= 0");
  if (u0.grid.dim != grid.dim) throw std::invalid_argument("solve: dimension mismatch");
  PdeSolution sol;
  double sup0 = 0.0;
  for (double v : u0.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("solve: initial data must be finite and >= 0");
    sup0 = std::max(sup0, v);
  }
  sol.upper_bound = std::max(1.0, sup0);

  SmoothedField u = u0;
  u.time = 0.0;
  zero_boundary(u);
  const auto times = step_times(horizon, grid.step_limit(), output_times);
  std::map<double, HeatStep> steps;
  std::size_t next_out = 0;
  auto emit_due = [&] {
    while (next_out < output_times.size() && output_times[next_out] <= u.time + kTimeMatch) {
      SmoothedField copy = u;
      copy.time = output_times[next_out];
      sol.fields.push_back(std::move(copy));
      ++next_out;
    }
  };
  emit_due();
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double dt = times[k] - times[k - 1];
    auto it = steps.find(dt);
    if (it == steps.end()) it = steps.emplace(dt, HeatStep(u.grid, dt)).first;
    reaction_in_place(u.values, 0.5 * dt);
    it->second.apply(u.values);
    reaction_in_place(u.values, 0.5 * dt);
    u.time = times[k];
    ++sol.steps;
    enforce_maximum_principle(u.values, sol.upper_bound, u.time);
    const double edge = boundary_layer_max(u);
    sol.max_boundary_value = std::max(sol.max_boundary_value, edge);
    if (edge > grid.boundary_tolerance) {
      std::ostringstream msg;
      msg << "solution reached the boundary: " << edge << " > " << grid.boundary_tolerance << " at t = " << u.time
          << "; enlarge the box";
      throw BoundaryError(msg.str());
    }
    emit_due();
  }
  return sol;
}

PicardResult mild_picard(const SmoothedField& u0, double horizon, const PdeGrid& grid, int iterations,
                         const std::vector<double>& output_times) {
  grid.validate();
  if (iterations < 1) throw std::invalid_argument("Picard iteration needs at least one iteration");
  if (!(horizon > 0.0)) throw std::invalid_argument("Picard iteration needs T > 0");
  const auto n = static_cast<std::size_t>(std::ceil(horizon / grid.step_limit() - 1e-9));
  const double dt = horizon / static_cast<double>(n);
  std::vector<std::size_t> out_index;
  for (double t : output_times) {
    const double k = t / dt;
    const double r = std::round(k);
    if (std::abs(k - r) * dt > kTimeMatch || r < 0 || r > static_cast<double>(n)) {
      throw std::invalid_argument("Picard iteration: output time not on the step grid");
    }
    out_index.push_back(static_cast<std::size_t>(r));
  }

  const HeatStep heat(u0.grid, dt);
  const std::size_t nodes = u0.values.size();
  SmoothedField start = u0;
  zero_boundary(start);
  std::vector<std::vector<double>> free(n + 1, start.values);
  for (std::size_t k = 1; k <= n; ++k) {
    free[k] = free[k - 1];
    heat.apply(free[k]);
  }
  std::vector<std::vector<double>> current = free;
  PicardResult res;
  std::vector<double> f_prev(nodes);
  std::vector<double> f_cur(nodes);
  std::vector<double> j(nodes);
  for (int m = 1; m <= iterations; ++m) {
    std::vector<std::vector<double>> next(n + 1);
    next[0] = free[0];
    std::fill(j.begin(), j.end(), 0.0);
    for (std::size_t i = 0; i < nodes; ++i) f_prev[i] = current[0][i] * (1.0 - current[0][i]);
    for (std::size_t k = 1; k <= n; ++k) {
      for (std::size_t i = 0; i < nodes; ++i) j[i] += 0.5 * dt * f_prev[i];
      heat.apply(j);
      for (std::size_t i = 0; i < nodes; ++i) f_cur[i] = current[k][i] * (1.0 - current[k][i]);
      next[k].resize(nodes);
      for (std::size_t i = 0; i < nodes; ++i) {
        j[i] += 0.5 * dt * f_cur[i];
        next[k][i] = free[k][i] + j[i];
      }
      // j now holds the full integral up to t_k; the boundary stays zero.
      std::swap(f_prev, f_cur);
    }
    double sup = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      for (std::size_t i = 0; i < nodes; ++i) sup = std::max(sup, std::abs(next[k][i] - current[k][i]));
    }
    if (!res.successive_sup.empty() && sup > res.successive_sup.back()) res.contracting = false;
    res.successive_sup.push_back(sup);
    current = std::move(next);
  }
  double sup0 = 0.0;
  for (double v : u0.values) sup0 = std::max(sup0, v);
  res.solution.upper_bound = std::max(1.0, sup0);
  res.solution.steps = n;
  for (std::size_t q = 0; q < out_index.size(); ++q) {
    SmoothedField f(u0.grid, output_times[q]);
    f.values = current[out_index[q]];
    res.solution.fields.push_back(std::move(f));
  }
  for (const auto& u : current) {
    SmoothedField probe(u0.grid, 0.0);
    probe.values = u;
    res.solution.max_boundary_value = std::max(res.solution.max_boundary_value, boundary_layer_max(probe));
  }
  return res;
}

double front_position(const SmoothedField& field, double level) {
  if (field.grid.dim != 1) throw std::invalid_argument("front position is defined for d = 1");
  const auto& v = field.values;
  for (std::size_t i = v.size(); i-- > 1;) {
    if (v[i - 1] >= level && v[i] < level) {
      const double x0 = field.grid.origin[0] + field.grid.spacing * static_cast<double>(i - 1);
      const double frac = (v[i - 1] - level) / (v[i - 1] - v[i]);
      return x0 + frac * field.grid.spacing;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace kpp::pde
