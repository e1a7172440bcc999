#include "kpp/branching.hpp"

#include "kpp/kernels.hpp"
#include "kpp/parallel.hpp"
#include "kpp/quadrature.hpp"
#include "kpp/rng.hpp"
#include "kpp/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace kpp::branching {

namespace {

rng::CounterEngine replicate_engine(const BranchingRunSpec& spec, std::uint64_t replicate) {
  return rng::CounterEngine(rng::derive({spec.seed, replicate, rng::tag(rng::Stream::replicate)}));
}

double exponential(rng::CounterEngine& g, double rate) { return -std::log1p(-g.uniform()) / rate; }

void cap_check(const BranchingRunSpec& spec, std::size_t n) {
  if (n > spec.population_cap) {
    throw PopulationCapError("branching population exceeded the cap of " + std::to_string(spec.population_cap));
  }
}

Positions initial_positions(const BranchingRunSpec& spec, rng::CounterEngine& g) {
  Positions p(spec.dim);
  p.coords.reserve(spec.initial_count * static_cast<std::size_t>(spec.dim));
  std::array<double, 3> x{};
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(spec.dim));
  for (std::size_t i = 0; i < spec.initial_count; ++i) {
    if (spec.law == InitialLaw::point) {
      for (int a = 0; a < spec.dim; ++a) x[a] = spec.origin.empty() ? 0.0 : spec.origin[a];
    } else {
      const auto& ic = spec.density;
      for (int tries = 0;; ++tries) {
        if (tries > 1'000'000) throw std::runtime_error("branching: initial rejection sampler stalled");
        for (int a = 0; a < spec.dim; ++a) x[a] = ic.radius * (2.0 * g.uniform() - 1.0);
        if (g.uniform() * ic.height < ic(xs)) break;
      }
    }
    p.push_back(xs);
  }
  return p;
}

void move_all(Positions& p, double h, rng::CounterEngine& g) {
  if (h <= 0.0) return;
  std::normal_distribution<double> normal(0.0, std::sqrt(h));
  for (double& v : p.coords) v += normal(g);
}

bool in_ball(std::span<const double> y, std::span<const double> centre, double delta) {
  return distance_squared(y, centre) <= delta * delta;
}

}  // namespace

void BranchingRunSpec::validate() const {
  if (dim < 1 || dim > 3) throw std::invalid_argument("branching: dimension must be 1, 2 or 3");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("branching: horizon must be >= 0");
  if (!origin.empty() && origin.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("branching: origin dimension mismatch");
  }
  if (law == InitialLaw::density) {
    if (density.dim != dim) throw std::invalid_argument("branching: initial density dimension mismatch");
    if (!(density.mass() > 0.0)) throw std::invalid_argument("branching: initial density has no mass");
  }
}

std::size_t YuleRun::population_at(double t) const {
  const auto it = std::upper_bound(event_times.begin(), event_times.end(), t);
  return initial_count + static_cast<std::size_t>(it - event_times.begin());
}

YuleRun simulate_yule(const BranchingRunSpec& spec, std::uint64_t replicate) {
  spec.validate();
  auto g = replicate_engine(spec, replicate);
  YuleRun run;
  run.initial_count = spec.initial_count;
  std::vector<std::uint32_t> alive;
  if (spec.record_genealogy) {
    run.genealogy = std::make_shared<particles::Genealogy>();
    for (std::size_t i = 0; i < spec.initial_count; ++i) {
      alive.push_back(run.genealogy->add_progenitor(static_cast<std::uint32_t>(i + 1), 0.0));
    }
  }
  double t = 0.0;
  std::size_t n = spec.initial_count;
  while (n > 0) {
    t += exponential(g, static_cast<double>(n));
    if (t > spec.horizon) break;
    if (spec.record_genealogy) {
      const std::size_t j = std::min(n - 1, static_cast<std::size_t>(g.uniform() * static_cast<double>(n)));
      const auto [cont, child] = run.genealogy->branch(alive[j], t);
      alive[j] = cont;
      alive.push_back(child);
    }
    run.event_times.push_back(t);
    ++n;
    cap_check(spec, n);
  }
  return run;
}

std::size_t yule_population(const BranchingRunSpec& spec, std::uint64_t replicate) {
  auto g = replicate_engine(spec, replicate);
  double t = 0.0;
  std::size_t n = spec.initial_count;
  while (n > 0) {
    t += exponential(g, static_cast<double>(n));
    if (t > spec.horizon) break;
    ++n;
    cap_check(spec, n);
  }
  return n;
}

BbmRun simulate_bbm(const BranchingRunSpec& spec, const std::vector<double>& times, std::uint64_t replicate) {
  spec.validate();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || times[i] > spec.horizon) throw std::invalid_argument("bbm: time outside [0, T]");
    if (i > 0 && times[i] < times[i - 1]) throw std::invalid_argument("bbm: times must be sorted");
  }
  auto g = replicate_engine(spec, replicate);
  BbmRun run;
  Positions pos = initial_positions(spec, g);
  std::vector<std::uint32_t> records;
  if (spec.record_genealogy) {
    run.genealogy = std::make_shared<particles::Genealogy>();
    for (std::size_t i = 0; i < spec.initial_count; ++i) {
      records.push_back(run.genealogy->add_progenitor(static_cast<std::uint32_t>(i + 1), 0.0));
    }
  }
  double t = 0.0;
  std::size_t next = 0;
  std::array<double, 3> x{};
  auto advance = [&](double to) {
    if (spec.motion) move_all(pos, to - t, g);
    t = to;
  };
  while (true) {
    const std::size_t n = pos.size();
    const double event = n > 0 ? t + exponential(g, static_cast<double>(n)) : std::numeric_limits<double>::infinity();
    while (next < times.size() && times[next] <= std::min(event, spec.horizon)) {
      advance(times[next]);
      run.snapshots.push_back({t, pos, records});
      ++next;
    }
    if (event > spec.horizon) break;
    advance(event);
    const std::size_t j = std::min(n - 1, static_cast<std::size_t>(g.uniform() * static_cast<double>(n)));
    std::copy_n(pos[j].begin(), spec.dim, x.begin());
    pos.push_back(std::span<const double>(x.data(), static_cast<std::size_t>(spec.dim)));
    if (spec.record_genealogy) {
      const auto [cont, child] = run.genealogy->branch(records[j], t);
      records[j] = cont;
      records.push_back(child);
    }
    ++run.events;
    cap_check(spec, pos.size());
  }
  return run;
}

OccupationEstimate occupation_statistic(const BranchingRunSpec& spec, double t, std::span<const double> x,
                                        double delta, std::size_t replicates) {
  if (replicates == 0) throw std::invalid_argument("occupation statistic: zero replicates");
  if (!(delta > 0.0)) throw std::invalid_argument("occupation statistic: delta must be positive");
  if (x.size() != static_cast<std::size_t>(spec.dim)) throw std::invalid_argument("occupation statistic: dimension");
  BranchingRunSpec one = spec;
  one.initial_count = 1;
  one.record_genealogy = false;
  one.validate();
  std::vector<double> z(replicates, 0.0);
  const std::vector<double> times{t};
  ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t r = 0; r < replicates; ++r) {
    slot.run([&] {
      const BbmRun run = simulate_bbm(one, times, r);
      const Positions& p = run.snapshots.front().positions;
      std::size_t c = 0;
      for (std::size_t i = 0; i < p.size(); ++i) c += in_ball(p[i], x, delta);
      z[r] = static_cast<double>(c);
    });
  }
  slot.rethrow();
  const auto ms = stats::mean_se(z);
  return {ms.mean, ms.se};
}

DensityConstant density_constant(const BranchingRunSpec& spec, const std::vector<double>& times,
                                 const std::vector<std::vector<double>>& points, const std::vector<double>& deltas,
                                 std::size_t replicates, double eta_sup) {
  if (replicates == 0) throw std::invalid_argument("density constant: zero replicates");
  if (times.empty() || points.empty() || deltas.empty()) throw std::invalid_argument("density constant: empty grid");
  BranchingRunSpec one = spec;
  one.initial_count = 1;
  one.record_genealogy = false;
  one.validate();
  const std::size_t cells = times.size() * points.size() * deltas.size();
  std::vector<std::uint32_t> counts(replicates * cells, 0);
  auto fill_counts = [&](std::size_t r) {
    const BbmRun run = simulate_bbm(one, times, r);
    std::size_t c = 0;
    for (const BbmSnapshot& snap : run.snapshots) {
      for (const auto& x : points) {
        for (double delta : deltas) {
          std::uint32_t k = 0;
          for (std::size_t i = 0; i < snap.positions.size(); ++i) k += in_ball(snap.positions[i], x, delta);
          counts[r * cells + c++] = k;
        }
      }
    }
  };
  ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t r = 0; r < replicates; ++r) {
    slot.run([&] { fill_counts(r); });
  }
  slot.rethrow();
  DensityConstant out;
  std::size_t c = 0;
  for (double t : times) {
    for (const auto& x : points) {
      for (double delta : deltas) {
        double sum = 0.0;
        for (std::size_t r = 0; r < replicates; ++r) sum += counts[r * cells + c];
        const double v = sum / static_cast<double>(replicates) / std::pow(delta, spec.dim);
        if (v > out.k1) {
          out.k1 = v;
          out.t_at = t;
          out.delta_at = delta;
          out.x_at = x;
        }
        ++c;
      }
    }
  }
  out.k = std::max(2.0 * spec.density.height, 2.0 * out.k1 * eta_sup / spec.density.mass());
  return out;
}

MomentCheck moment_sums(const BoundedFunction& f, const BoundedFunction& g, const BranchingRunSpec& spec,
                        std::size_t replicates, std::uint64_t first_replicate) {
  if (replicates == 0) throw std::invalid_argument("moment sums: zero replicates");
  BranchingRunSpec s = spec;
  s.record_genealogy = false;
  s.validate();
  MomentCheck out;
  out.double_samples.assign(replicates, 0.0);
  out.triple_samples.assign(replicates, 0.0);
  const std::vector<double> times{s.horizon};
  const int d = s.dim;
  ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t r = 0; r < replicates; ++r) {
    slot.run([&] {
      const BbmRun run = simulate_bbm(s, times, first_replicate + r);
      const Positions& p = run.snapshots.front().positions;
      const std::size_t n = p.size();
      std::array<double, 3> diff{};
      const std::span<const double> dv(diff.data(), static_cast<std::size_t>(d));
      auto eval = [&](const PointFunction& h, std::size_t a, std::size_t b) {
        for (int k = 0; k < d; ++k) diff[k] = p[a][k] - p[b][k];
        return h(dv);
      };
      std::vector<double> gsum(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) gsum[j] += eval(g.f, j, k);
      }
      double dbl = 0.0;
      double tri = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double fij = eval(f.f, i, j);
          dbl += fij;
          tri += fij * gsum[j];
        }
      }
      out.double_samples[r] = dbl;
      out.triple_samples[r] = tri;
    });
  }
  slot.rethrow();
  const auto a = stats::mean_se(out.double_samples);
  const auto b = stats::mean_se(out.triple_samples);
  out.double_mean = a.mean;
  out.double_se = a.se;
  out.triple_mean = b.mean;
  out.triple_se = b.se;
  return out;
}

double weighted_integral(const PointFunction& h, int dim, double half_width, double c) {
  const int panels = dim == 1 ? 512 : (dim == 2 ? 96 : 24);
  return quad::box_integral([&](std::span<const double> x) { return h(x) * std::exp(-c * kernels::norm(x)); }, dim,
                            half_width, panels, dim == 1 ? 8 : 4);
}

double double_sum_bound(const BoundedFunction& f, const BranchingRunSpec& spec, double c) {
  const double ct = std::exp(spec.horizon);
  const double n0 = static_cast<double>(spec.initial_count);
  const double n = n0 / spec.density.mass();
  const double gamma = spec.density.height;
  const double fi = weighted_integral(f.f, spec.dim, f.half_width, c);
  return n0 * 2.0 * ct * ct * f.sup + n * n * ct * ct * gamma * gamma * std::exp(c * spec.density.radius) * fi;
}

double triple_sum_bound(const BoundedFunction& f, const BoundedFunction& g, const BranchingRunSpec& spec, double c) {
  const double ct = std::exp(spec.horizon);
  const double ct3 = ct * ct * ct;
  const double n0 = static_cast<double>(spec.initial_count);
  const double n = n0 / spec.density.mass();
  const double gamma = spec.density.height;
  const double ecr = std::exp(c * spec.density.radius);
  const double fi = weighted_integral(f.f, spec.dim, f.half_width, c);
  const double gi = weighted_integral(g.f, spec.dim, g.half_width, c);
  const double g1 = weighted_integral([&](std::span<const double> x) { return std::abs(g.f(x)); }, spec.dim,
                                      g.half_width, 0.0);
  return n0 * 5.0 * ct3 * f.sup * g.sup + n * n * 2.0 * ct3 * gamma * gamma * ecr * (f.sup * gi + g.sup * fi) +
         n * n * n * ct3 * gamma * gamma * gamma * ecr * g1 * fi;
}

void write_newick(std::ostream& out, const particles::Genealogy& genealogy, double horizon) {
  const auto& recs = genealogy.records();
  std::vector<std::vector<std::uint32_t>> children(recs.size());
  for (std::size_t r = 0; r < recs.size(); ++r) {
    if (recs[r].parent >= 0) children[static_cast<std::size_t>(recs[r].parent)].push_back(static_cast<std::uint32_t>(r));
  }
  auto node = [&](auto&& self, std::uint32_t r) -> void {
    const auto& rec = recs[r];
    if (!children[r].empty()) {
      out << '(';
      for (std::size_t i = 0; i < children[r].size(); ++i) {
        if (i) out << ',';
        self(self, children[r][i]);
      }
      out << ')';
    }
    out << genealogy.label(r) << ':' << rec.birth_time << '-' << std::min(rec.end_time, horizon);
    if (rec.end == particles::RecordEnd::died) out << 'd';
  };
  for (std::size_t r = 0; r < recs.size(); ++r) {
    if (recs[r].parent < 0) {
      node(node, static_cast<std::uint32_t>(r));
      out << ";\n";
    }
  }
}

}  // namespace kpp::branching
