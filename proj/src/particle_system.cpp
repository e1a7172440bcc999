#include "kpp/particle_system.hpp"

#include "kpp/rng.hpp"
#include "kpp/spatial_index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace kpp::particles {

namespace {

constexpr double kTimeTolerance = 1e-12;

// Brownian increment of one label over a span h of the step.
void displace(std::span<double> x, const ModelParameters& params, std::uint64_t step_index, std::uint64_t key,
              double h) {
  if (!params.motion || !(h > 0.0)) return;
  rng::CounterEngine g(rng::derive({params.seed, step_index, key, rng::tag(rng::Stream::diffusion)}));
  std::normal_distribution<double> normal(0.0, std::sqrt(h));
  for (double& c : x) c += normal(g);
}

void diffuse(ParticleConfiguration& config, const ModelParameters& params, std::uint64_t step_index, double dt) {
  if (!params.motion) return;
  const std::size_t n = config.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) displace(config.positions[i], params, step_index, config.keys[i], dt);
}

double exponential_clock(rng::CounterEngine& g, double rate) {
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  // 1 - u lies in (0, 1], so the log is finite.
  return -std::log1p(-g.uniform()) / rate;
}

struct Buffers {
  Positions positions;
  std::vector<std::uint32_t> records;
  std::vector<std::uint64_t> keys;

  explicit Buffers(int dim) : positions(dim) {}
  void push(std::span<const double> x, std::uint32_t record, std::uint64_t key) {
    positions.push_back(x);
    records.push_back(record);
    keys.push_back(key);
  }
};

void commit(ParticleConfiguration& config, Buffers&& next) {
  config.positions = std::move(next.positions);
  config.records = std::move(next.records);
  config.keys = std::move(next.keys);
}

// Rates are frozen for the whole step. Each label runs its own exponential
// birth and death clocks, drawn from its key; a birth closes the label and
// starts two fresh ones at the event time, which inherit the frozen rates.
// Every label moves by its own Brownian increment over the part of the step
// it lives, so newborn pairs have separated by the end of the step.
StepRecord clock_leap(ParticleConfiguration& config, const ModelParameters& params, std::uint64_t step_index,
                      double dt) {
  StepRecord rec;
  const EventRates rates = event_rates(config, params);
  rec.max_rate = rates.max_total;
  const std::size_t n = config.size();
  const double t0 = config.time;
  const int d = config.dim();

  std::vector<char> eventful(n, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    rng::CounterEngine g(rng::derive({params.seed, step_index, config.keys[i], rng::tag(rng::Stream::events)}));
    const double tb = exponential_clock(g, rates.birth[i]);
    const double td = exponential_clock(g, rates.death[i]);
    eventful[i] = std::min(tb, td) < dt;
    if (!eventful[i]) displace(config.positions[i], params, step_index, config.keys[i], dt);
  }

  Genealogy& gen = *config.genealogy;
  Buffers next(d);
  next.records.reserve(n);
  next.keys.reserve(n);
  next.positions.coords.reserve(config.positions.coords.size());

  struct Pending {
    double start;
    std::uint32_t record;
    std::uint64_t key;
    std::array<double, 3> x;
  };
  std::vector<Pending> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (!eventful[i]) {
      next.push(config.positions[i], config.records[i], config.keys[i]);
      continue;
    }
    stack.clear();
    Pending first{0.0, config.records[i], config.keys[i], {}};
    std::copy_n(config.positions[i].begin(), d, first.x.begin());
    stack.push_back(first);
    while (!stack.empty()) {
      Pending p = stack.back();
      stack.pop_back();
      const std::span<double> x(p.x.data(), static_cast<std::size_t>(d));
      rng::CounterEngine g(rng::derive({params.seed, step_index, p.key, rng::tag(rng::Stream::events)}));
      const double tb = p.start + exponential_clock(g, rates.birth[i]);
      const double td = p.start + exponential_clock(g, rates.death[i]);
      if (std::min(tb, td) >= dt) {
        displace(x, params, step_index, p.key, dt - p.start);
        next.push(x, p.record, p.key);
      } else if (tb < td) {
        displace(x, params, step_index, p.key, tb - p.start);
        const auto [cont, child] = gen.branch(p.record, t0 + tb);
        ++rec.births;
        // Child pushed first so the parent continuation is resolved first.
        stack.push_back({tb, child, child_key(p.key, 2), p.x});
        stack.push_back({tb, cont, child_key(p.key, 1), p.x});
      } else {
        gen.kill(p.record, t0 + td);
        ++rec.deaths;
      }
    }
  }
  commit(config, std::move(next));
  return rec;
}

// One Bernoulli birth trial and one Bernoulli death trial per particle.
StepRecord bernoulli_leap(ParticleConfiguration& config, const ModelParameters& params, std::uint64_t step_index,
                          double dt) {
  StepRecord rec;
  const EventRates rates = event_rates(config, params);
  rec.max_rate = rates.max_total;
  const std::size_t n = config.size();
  const double t1 = config.time + dt;

  std::vector<std::uint8_t> flags(n, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    rng::CounterEngine g(rng::derive({params.seed, step_index, config.keys[i], rng::tag(rng::Stream::events)}));
    const double ub = g.uniform();
    const double ud = g.uniform();
    std::uint8_t f = 0;
    if (ub < -std::expm1(-rates.birth[i] * dt)) f |= 1;
    if (ud < -std::expm1(-rates.death[i] * dt)) f |= 2;
    flags[i] = f;
  }

  Genealogy& gen = *config.genealogy;
  Buffers next(config.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = config.positions[i];
    const bool birth = flags[i] & 1;
    const bool death = flags[i] & 2;
    if (birth) {
      const auto [cont, child] = gen.branch(config.records[i], t1);
      ++rec.births;
      if (death) {
        gen.kill(cont, t1);
        ++rec.deaths;
      } else {
        next.push(x, cont, child_key(config.keys[i], 1));
      }
      next.push(x, child, child_key(config.keys[i], 2));
    } else if (death) {
      gen.kill(config.records[i], t1);
      ++rec.deaths;
    } else {
      next.push(x, config.records[i], config.keys[i]);
    }
  }
  commit(config, std::move(next));
  return rec;
}

// Exact event-driven simulation with frozen positions: proposals at the
// global bound m * B, accepted against the current rates, with the
// interaction sums updated incrementally after every accepted event. The
// rates see the positions at the start of the step; the returned positions
// follow the Brownian tree of the step, as in clock_leap.
StepRecord thinning(ParticleConfiguration& config, const ModelParameters& params, std::uint64_t step_index,
                    double dt) {
  StepRecord rec;
  const bool interacting = params.deaths == DeathModel::interaction;
  const kernels::RescaledKernel kernel = params.kernel();
  const double self = params.include_self ? 0.0 : kernel.peak();
  const double inv_n = 1.0 / static_cast<double>(params.n_scale);
  const bool clamped = params.rate_variant == RateVariant::clamped;

  std::vector<double> sums;
  spatial::CellGrid grid;
  if (interacting) {
    grid = spatial::CellGrid::build(config.positions, kernel.support_radius());
    sums = spatial::local_interaction_sums(grid, kernel, config.positions);
  }
  auto death_of = [&](std::size_t j) {
    switch (params.deaths) {
      case DeathModel::interaction:
        return std::max(0.0, (sums[j] - self) * inv_n);
      case DeathModel::constant:
        return params.constant_death_rate;
      case DeathModel::none:
        break;
    }
    return 0.0;
  };
  auto rates_of = [&](std::size_t j) -> std::pair<double, double> {
    const double dj = death_of(j);
    if (clamped) return {params.births ? std::max(0.0, 1.0 - dj) : 0.0, 0.0};
    return {params.births ? 1.0 : 0.0, dj};
  };

  const std::size_t n0 = config.size();
  Positions track = config.positions;
  std::vector<double> seg_start(n0, 0.0);
  std::vector<char> alive(n0, 1);
  std::vector<std::uint32_t> active(n0);
  std::vector<std::uint32_t> slot(n0);
  for (std::uint32_t i = 0; i < n0; ++i) active[i] = slot[i] = i;

  double bound = 0.0;
  for (std::size_t j = 0; j < n0; ++j) {
    const auto [b, m] = rates_of(j);
    bound = std::max(bound, b + m);
  }
  rec.max_rate = bound;
  if (clamped && params.births) bound = 1.0;

  Genealogy& gen = *config.genealogy;
  rng::CounterEngine g(rng::derive({params.seed, step_index, rng::tag(rng::Stream::thinning)}));
  const double t0 = config.time;
  double s = 0.0;
  std::array<double, 3> here{};
  const int d = config.dim();
  while (!active.empty() && bound > 0.0) {
    s += exponential_clock(g, bound * static_cast<double>(active.size()));
    if (s >= dt) break;
    const std::size_t pick = std::min(active.size() - 1, static_cast<std::size_t>(g.uniform() * active.size()));
    const std::uint32_t j = active[pick];
    const auto [b, m] = rates_of(j);
    const double u = g.uniform() * bound;
    if (u < b) {
      displace(track[j], params, step_index, config.keys[j], s - seg_start[j]);
      seg_start[j] = s;
      seg_start.push_back(s);
      std::array<double, 3> branched{};
      std::copy_n(track[j].begin(), d, branched.begin());
      track.push_back(std::span<const double>(branched.data(), static_cast<std::size_t>(d)));
      const auto [cont, child] = gen.branch(config.records[j], t0 + s);
      ++rec.births;
      const auto index = static_cast<std::uint32_t>(config.size());
      std::copy_n(config.positions[j].begin(), d, here.begin());
      const std::span<const double> x(here.data(), static_cast<std::size_t>(d));
      config.positions.push_back(x);
      config.records[j] = cont;
      config.records.push_back(child);
      const std::uint64_t parent_key = config.keys[j];
      config.keys[j] = child_key(parent_key, 1);
      config.keys.push_back(child_key(parent_key, 2));
      alive.push_back(1);
      slot.push_back(static_cast<std::uint32_t>(active.size()));
      active.push_back(index);
      if (interacting) {
        grid.insert(index, x);
        grid.for_each_candidate(x, [&](std::uint32_t k) {
          if (k != index && alive[k]) sums[k] += kernel.radial(std::sqrt(distance_squared(x, config.positions[k])));
        });
        sums.push_back(sums[j]);
        if (!clamped) {
          double local = 0.0;
          grid.for_each_candidate(x, [&](std::uint32_t k) {
            if (alive[k]) {
              const auto [bk, mk] = rates_of(k);
              local = std::max(local, bk + mk);
            }
          });
          bound = std::max(bound, local);
        }
      }
      rec.max_rate = std::max(rec.max_rate, b + m);
    } else if (u < b + m) {
      gen.kill(config.records[j], t0 + s);
      ++rec.deaths;
      alive[j] = 0;
      const std::uint32_t last = active.back();
      active[slot[j]] = last;
      slot[last] = slot[j];
      active.pop_back();
      if (interacting) {
        const auto x = config.positions[j];
        grid.for_each_candidate(x, [&](std::uint32_t k) {
          if (k != j && alive[k]) sums[k] -= kernel.radial(std::sqrt(distance_squared(x, config.positions[k])));
        });
      }
    }
  }

  Buffers next(d);
  for (std::size_t i = 0; i < config.size(); ++i) {
    if (!alive[i]) continue;
    displace(track[i], params, step_index, config.keys[i], dt - seg_start[i]);
    next.push(track[i], config.records[i], config.keys[i]);
  }
  commit(config, std::move(next));
  return rec;
}

}  // namespace

RateVariant parse_rate_variant(const std::string& name) {
  if (name == "unclamped") return RateVariant::unclamped;
  if (name == "clamped") return RateVariant::clamped;
  throw std::invalid_argument("unknown rate variant: " + name);
}

SteppingScheme parse_stepping_scheme(const std::string& name) {
  if (name == "tau-leap") return SteppingScheme::tau_leap;
  if (name == "bernoulli-leap") return SteppingScheme::bernoulli_leap;
  if (name == "thinning") return SteppingScheme::thinning;
  throw std::invalid_argument("unknown stepping scheme: " + name);
}

std::string to_string(RateVariant v) { return v == RateVariant::clamped ? "clamped" : "unclamped"; }

std::string to_string(SteppingScheme s) {
  switch (s) {
    case SteppingScheme::tau_leap:
      return "tau-leap";
    case SteppingScheme::bernoulli_leap:
      return "bernoulli-leap";
    case SteppingScheme::thinning:
      return "thinning";
  }
  return "?";
}

double ModelParameters::resolved_eps() const {
  if (eps) return *eps;
  return std::pow(static_cast<double>(n_scale), -1.0 / dim);
}

double ModelParameters::density_constant() const {
  return std::pow(resolved_eps(), -dim) / static_cast<double>(n_scale);
}

kernels::RescaledKernel ModelParameters::kernel() const {
  return kernels::RescaledKernel(kernels::Mollifier(dim, mollifier, support_radius), resolved_eps());
}

void ModelParameters::validate() const {
  if (n_scale < 1) throw std::invalid_argument("N must be positive");
  if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (eps && !(*eps > 0.0 && *eps <= 1.0)) throw std::invalid_argument("eps must lie in (0, 1]");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be finite and >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(rate_dt_target > 0.0)) throw std::invalid_argument("rate_dt_target must be positive");
  if (!(explosion_factor > 1.0)) throw std::invalid_argument("explosion factor must exceed 1");
  if (!(support_radius > 0.0)) throw std::invalid_argument("support radius must be positive");
  if (constant_death_rate < 0.0) throw std::invalid_argument("constant death rate must be >= 0");
}

InitialShape parse_initial_shape(const std::string& name) {
  if (name == "indicator") return InitialShape::indicator;
  if (name == "bump") return InitialShape::bump;
  throw std::invalid_argument("unknown initial shape: " + name);
}

double InitialCondition::operator()(std::span<const double> x) const {
  const double r = kernels::norm(x);
  if (r > radius) return 0.0;
  if (shape == InitialShape::indicator) return height;
  const double s = 1.0 - (r * r) / (radius * radius);
  return height * s * s;
}

double InitialCondition::mass() const {
  const double rd = std::pow(radius, dim);
  if (shape == InitialShape::indicator) return height * kernels::unit_ball_volume(dim) * rd;
  const double d = dim;
  const double radial = 1.0 / d - 2.0 / (d + 2.0) + 1.0 / (d + 4.0);
  return height * kernels::unit_sphere_area(dim) * rd * radial;
}

std::uint32_t Genealogy::add_progenitor(std::uint32_t progenitor, double time) {
  GenealogyRecord r;
  r.progenitor = progenitor;
  r.birth_time = time;
  records_.push_back(r);
  return static_cast<std::uint32_t>(records_.size() - 1);
}

std::pair<std::uint32_t, std::uint32_t> Genealogy::branch(std::uint32_t record, double time) {
  GenealogyRecord& parent = records_.at(record);
  if (parent.end != RecordEnd::alive) throw std::logic_error("genealogy: branching a closed record");
  parent.end = RecordEnd::branched;
  parent.end_time = time;
  GenealogyRecord a;
  a.parent = record;
  a.progenitor = parent.progenitor;
  a.depth = parent.depth + 1;
  a.birth_time = time;
  GenealogyRecord b = a;
  a.digit = 1;
  b.digit = 2;
  records_.push_back(a);
  records_.push_back(b);
  const auto n = static_cast<std::uint32_t>(records_.size());
  return {n - 2, n - 1};
}

void Genealogy::kill(std::uint32_t record, double time) {
  GenealogyRecord& r = records_.at(record);
  if (r.end != RecordEnd::alive) throw std::logic_error("genealogy: killing a closed record");
  r.end = RecordEnd::died;
  r.end_time = time;
}

std::vector<std::uint32_t> Genealogy::digits(std::uint32_t record) const {
  std::vector<std::uint32_t> out;
  std::int64_t r = record;
  while (r >= 0) {
    const GenealogyRecord& g = records_.at(static_cast<std::size_t>(r));
    out.push_back(g.parent < 0 ? g.progenitor : g.digit);
    r = g.parent;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string Genealogy::label(std::uint32_t record) const {
  const auto ds = digits(record);
  std::string s;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(ds[i]);
  }
  return s;
}

std::uint64_t progenitor_key(std::uint32_t progenitor) { return rng::derive({0x70726f67ULL, progenitor}); }

std::uint64_t child_key(std::uint64_t parent_key, std::uint32_t digit) { return rng::derive({parent_key, digit}); }

ParticleConfiguration make_configuration(Positions positions, const ModelParameters& params) {
  params.validate();
  if (positions.dim != params.dim) throw std::invalid_argument("configuration dimension mismatch");
  ParticleConfiguration c;
  c.genealogy = std::make_shared<Genealogy>();
  const std::size_t n = positions.size();
  c.records.reserve(n);
  c.keys.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = static_cast<std::uint32_t>(i + 1);
    for (double v : positions[i]) {
      if (!std::isfinite(v)) throw std::invalid_argument("configuration: non-finite coordinate");
    }
    c.records.push_back(c.genealogy->add_progenitor(a, 0.0));
    c.keys.push_back(progenitor_key(a));
  }
  c.positions = std::move(positions);
  c.n_scale = params.n_scale;
  c.eps = params.resolved_eps();
  return c;
}

ParticleConfiguration sample_initial(const InitialCondition& ic, const ModelParameters& params,
                                     std::int64_t max_proposals_per_point) {
  params.validate();
  if (ic.dim != params.dim) throw std::invalid_argument("initial condition dimension mismatch");
  const double mass = ic.mass();
  if (!(mass >= 0.0) || !std::isfinite(mass)) throw std::invalid_argument("initial condition must have finite mass >= 0");
  const auto n0 = static_cast<std::int64_t>(std::llround(static_cast<double>(params.n_scale) * mass));
  rng::CounterEngine g(rng::derive({params.seed, rng::tag(rng::Stream::initial)}));
  Positions pos(params.dim);
  pos.coords.reserve(static_cast<std::size_t>(n0 * params.dim));
  std::array<double, 3> x{};
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(params.dim));
  const std::int64_t budget = max_proposals_per_point * std::max<std::int64_t>(n0, 1);
  std::int64_t proposals = 0;
  for (std::int64_t i = 0; i < n0; ++i) {
    while (true) {
      if (++proposals > budget) throw std::runtime_error("initial sampler exceeded its proposal budget");
      for (int a = 0; a < params.dim; ++a) x[a] = ic.radius * (2.0 * g.uniform() - 1.0);
      if (g.uniform() * ic.height < ic(xs)) break;
    }
    pos.push_back(xs);
  }
  return make_configuration(std::move(pos), params);
}

std::vector<double> death_rates(const ParticleConfiguration& config, const ModelParameters& params) {
  const std::size_t n = config.size();
  switch (params.deaths) {
    case DeathModel::none:
      return std::vector<double>(n, 0.0);
    case DeathModel::constant:
      return std::vector<double>(n, params.constant_death_rate);
    case DeathModel::interaction:
      break;
  }
  const kernels::RescaledKernel kernel = params.kernel();
  const auto grid = spatial::CellGrid::build(config.positions, kernel.support_radius());
  std::vector<double> s = spatial::local_interaction_sums(grid, kernel, config.positions);
  const double self = params.include_self ? 0.0 : kernel.peak();
  const double inv_n = 1.0 / static_cast<double>(params.n_scale);
  for (double& v : s) v = std::max(0.0, (v - self) * inv_n);
  return s;
}

EventRates event_rates(const ParticleConfiguration& config, const ModelParameters& params) {
  EventRates r;
  std::vector<double> dj = death_rates(config, params);
  const std::size_t n = dj.size();
  r.birth.resize(n);
  if (params.rate_variant == RateVariant::clamped) {
    for (std::size_t i = 0; i < n; ++i) r.birth[i] = params.births ? std::max(0.0, 1.0 - dj[i]) : 0.0;
    r.death.assign(n, 0.0);
  } else {
    std::fill(r.birth.begin(), r.birth.end(), params.births ? 1.0 : 0.0);
    r.death = std::move(dj);
  }
  for (std::size_t i = 0; i < n; ++i) r.max_total = std::max(r.max_total, r.birth[i] + r.death[i]);
  return r;
}

StepRecord step(ParticleConfiguration& config, const ModelParameters& params, std::uint64_t step_index, double dt) {
  if (dt < 0.0 || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be finite and >= 0");
  StepRecord rec;
  rec.step = step_index;
  if (dt == 0.0) {
    rec.time = config.time;
    rec.population = config.size();
    return rec;
  }
  switch (params.scheme) {
    case SteppingScheme::tau_leap:
      rec = clock_leap(config, params, step_index, dt);
      break;
    case SteppingScheme::bernoulli_leap:
      diffuse(config, params, step_index, dt);
      rec = bernoulli_leap(config, params, step_index, dt);
      break;
    case SteppingScheme::thinning:
      rec = thinning(config, params, step_index, dt);
      break;
  }
  config.time += dt;
  rec.step = step_index;
  rec.dt = dt;
  rec.time = config.time;
  rec.population = config.size();
  return rec;
}

RunReport run(ParticleConfiguration config, const ModelParameters& params, const std::vector<double>& snapshot_times,
              const SnapshotObserver& observer, bool every_step) {
  params.validate();
  const double horizon = params.horizon;
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    const double s = snapshot_times[i];
    if (!(s >= config.time - kTimeTolerance && s <= horizon + kTimeTolerance)) {
      throw std::invalid_argument("snapshot time outside [t0, T]");
    }
    if (i > 0 && s < snapshot_times[i - 1]) throw std::invalid_argument("snapshot times must be sorted");
  }

  // The run appends to its own copy of the genealogy, so the same starting
  // configuration can be run again.
  if (config.genealogy) config.genealogy = std::make_shared<Genealogy>(*config.genealogy);
  RunReport report;
  report.initial_population = config.size();
  const double n0 = static_cast<double>(std::max<std::size_t>(config.size(), 1));
  std::size_t next = 0;
  auto emit = [&] {
    if (observer) observer(config);
    report.snapshot_times.push_back(config.time);
  };
  auto due = [&] {
    bool any = false;
    while (next < snapshot_times.size() && snapshot_times[next] <= config.time + kTimeTolerance) {
      ++next;
      any = true;
    }
    return any;
  };
  if (due()) emit();

  double max_rate = params.adaptive_dt ? event_rates(config, params).max_total : 0.0;
  std::uint64_t step_index = 0;
  const double land = 1e-9 * std::max(1.0, horizon);
  while (config.time < horizon - kTimeTolerance) {
    double h = params.dt;
    if (params.adaptive_dt && max_rate > 0.0) h = std::min(h, params.rate_dt_target / max_rate);
    const double target = next < snapshot_times.size() ? std::min(snapshot_times[next], horizon) : horizon;
    bool landing = false;
    if (config.time + h >= target - land) {
      h = target - config.time;
      landing = true;
    }
    StepRecord rec = step(config, params, step_index++, h);
    if (landing) config.time = target;
    rec.time = config.time;
    report.steps.push_back(rec);
    if (static_cast<double>(config.size()) > params.explosion_factor * n0 * std::exp(config.time)) {
      std::ostringstream msg;
      msg << "population " << config.size() << " exceeded " << params.explosion_factor << " * N0 * e^t at t = "
          << config.time;
      throw ExplosionError(msg.str());
    }
    max_rate = rec.max_rate;
    const bool snap = due();
    if (snap || every_step) emit();
  }
  return report;
}

Trajectory run(const ParticleConfiguration& config, const ModelParameters& params,
               const std::vector<double>& snapshot_times, bool every_step) {
  Trajectory traj;
  traj.report = run(
      config, params, snapshot_times, [&](const ParticleConfiguration& c) { traj.snapshots.push_back(c); },
      every_step);
  return traj;
}

std::vector<double> uniform_times(double horizon, int intervals) {
  if (intervals < 1) throw std::invalid_argument("need at least one interval");
  std::vector<double> t(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) t[static_cast<std::size_t>(i)] = horizon * i / intervals;
  t.back() = horizon;
  return t;
}

void write_snapshot_csv_header(std::ostream& out, int dim) {
  out << "time,particle_id,lineage";
  for (int a = 1; a <= dim; ++a) out << ",x" << a;
  out << '\n';
}

void write_snapshot_csv(std::ostream& out, const ParticleConfiguration& config) {
  out << std::setprecision(17);
  for (std::size_t i = 0; i < config.size(); ++i) {
    out << config.time << ',' << config.records[i] << ',' << config.label(i);
    for (double v : config.positions[i]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace kpp::particles
