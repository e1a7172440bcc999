#include "kpp/spatial_index.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace kpp::spatial {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr double kMaxCellCoordinate = 4.0e18;

}  // namespace

std::size_t CellKeyHash::operator()(const CellKey& k) const noexcept {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(k[0]));
  h = mix64(h ^ static_cast<std::uint64_t>(k[1]));
  h = mix64(h ^ static_cast<std::uint64_t>(k[2]));
  return static_cast<std::size_t>(h);
}

CellKey CellGrid::key_of(std::span<const double> x) const {
  CellKey k{0, 0, 0};
  for (int i = 0; i < dim_; ++i) {
    const double c = std::floor(x[i] / cell_size_);
    if (!std::isfinite(c) || std::abs(c) > kMaxCellCoordinate) {
      throw std::invalid_argument("cell grid: non-finite or out-of-range coordinate " +
                                  std::to_string(x[i]));
    }
    k[i] = static_cast<std::int64_t>(c);
  }
  return k;
}

CellGrid CellGrid::build(const Positions& positions, double cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw std::invalid_argument("cell grid: cell size must be positive");
  }
  if (positions.dim < 1 || positions.dim > 3) {
    throw std::invalid_argument("cell grid supports 1 <= d <= 3");
  }
  CellGrid grid;
  grid.dim_ = positions.dim;
  grid.cell_size_ = cell_size;
  grid.count_ = positions.size();

  const std::size_t n = positions.size();
  std::vector<CellKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = grid.key_of(positions[i]);
  grid.order_.resize(n);
  if (n == 0) return grid;

  CellKey lo = keys[0];
  CellKey hi = keys[0];
  for (const CellKey& k : keys) {
    for (int a = 0; a < grid.dim_; ++a) {
      lo[a] = std::min(lo[a], k[a]);
      hi[a] = std::max(hi[a], k[a]);
    }
  }
  double box = 1.0;
  for (int a = 0; a < grid.dim_; ++a) box *= static_cast<double>(hi[a] - lo[a]) + 1.0;

  if (box <= 32.0 * static_cast<double>(n) + 4096.0) {
    grid.dense_ = true;
    grid.lo_ = lo;
    for (int a = 0; a < grid.dim_; ++a) grid.extent_[a] = hi[a] - lo[a] + 1;
    const auto flat = [&](const CellKey& k) {
      return static_cast<std::size_t>(((k[2] - lo[2]) * grid.extent_[1] + (k[1] - lo[1])) * grid.extent_[0] +
                                      (k[0] - lo[0]));
    };
    // counting sort, stable in the particle index
    grid.start_.assign(static_cast<std::size_t>(box) + 1, 0);
    for (const CellKey& k : keys) ++grid.start_[flat(k) + 1];
    std::partial_sum(grid.start_.begin(), grid.start_.end(), grid.start_.begin());
    std::vector<std::uint32_t> fill(grid.start_.begin(), grid.start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) grid.order_[fill[flat(keys[i])]++] = static_cast<std::uint32_t>(i);
    grid.fill_sorted(positions);
    return grid;
  }

  std::iota(grid.order_.begin(), grid.order_.end(), 0u);
  std::sort(grid.order_.begin(), grid.order_.end(),
            [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b] || (keys[a] == keys[b] && a < b); });
  grid.cells_.reserve(n);
  std::size_t p = 0;
  while (p < n) {
    const CellKey& key = keys[grid.order_[p]];
    std::size_t q = p + 1;
    while (q < n && keys[grid.order_[q]] == key) ++q;
    grid.cells_.emplace(key, Cell{static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(q)});
    p = q;
  }
  grid.fill_sorted(positions);
  return grid;
}

void CellGrid::fill_sorted(const Positions& positions) {
  const auto d = static_cast<std::size_t>(dim_);
  sorted_.resize(order_.size() * d);
  for (std::size_t p = 0; p < order_.size(); ++p) {
    const auto x = positions[order_[p]];
    std::copy(x.begin(), x.end(), sorted_.begin() + static_cast<std::ptrdiff_t>(p * d));
  }
}

std::size_t CellGrid::occupied_cells() const {
  std::size_t total = 0;
  if (dense_) {
    for (std::size_t c = 0; c + 1 < start_.size(); ++c) total += start_[c + 1] > start_[c] ? 1 : 0;
  } else {
    total = cells_.size();
  }
  for (const auto& [key, extra] : extra_) {
    if (extra.empty()) continue;
    bool counted = false;
    if (dense_) {
      bool inside = true;
      for (int a = 0; a < dim_; ++a) inside = inside && key[a] >= lo_[a] && key[a] < lo_[a] + extent_[a];
      if (inside) {
        const auto c = static_cast<std::size_t>(((key[2] - lo_[2]) * extent_[1] + (key[1] - lo_[1])) * extent_[0] +
                                                (key[0] - lo_[0]));
        counted = start_[c + 1] > start_[c];
      }
    } else {
      counted = cells_.count(key) > 0;
    }
    if (!counted) ++total;
  }
  return total;
}

std::size_t CellGrid::registered() const {
  std::size_t total = 0;
  if (dense_) {
    total = start_.empty() ? 0 : start_.back();
  } else {
    for (const auto& [key, cell] : cells_) total += cell.end - cell.begin;
  }
  for (const auto& [key, extra] : extra_) total += extra.size();
  return total;
}

void CellGrid::insert(std::uint32_t index, std::span<const double> x) {
  extra_[key_of(x)].push_back(index);
  inserted_.push_back(index);
  ++count_;
}

std::vector<double> local_interaction_sums(const CellGrid& grid, const kernels::RescaledKernel& kernel,
                                           const Positions& positions) {
  if (grid.particle_count() != positions.size() || grid.dim() != positions.dim) {
    throw std::invalid_argument("interaction sums: stale spatial index (particle count mismatch)");
  }
  if (grid.cell_size() < kernel.support_radius() * (1.0 - 1e-12)) {
    throw std::invalid_argument("interaction sums: cell size below the kernel support radius");
  }
  const double r2max = kernel.support_radius() * kernel.support_radius();
  std::vector<double> sums(positions.size(), 0.0);
  const auto& order = grid.order();
  const auto& inserted = grid.inserted();
  const auto total = static_cast<std::int64_t>(order.size() + inserted.size());
  // Queries run in cell order so that neighbouring queries touch the same
  // memory; candidates come from the grid's sorted copy of the positions.
#pragma omp parallel for schedule(static)
  for (std::int64_t q = 0; q < total; ++q) {
    const bool built = static_cast<std::size_t>(q) < order.size();
    const std::uint32_t j = built ? order[q] : inserted[q - order.size()];
    const auto xj = built ? grid.sorted_position(static_cast<std::size_t>(q)) : positions[j];
    double s = 0.0;
    grid.for_each_slot_range(xj, [&](std::uint32_t b, std::uint32_t e) {
      for (std::uint32_t p = b; p < e; ++p) {
        const double d2 = distance_squared(xj, grid.sorted_position(p));
        if (d2 < r2max) s += kernel.radial(std::sqrt(d2));
      }
    });
    grid.for_each_inserted(xj, [&](std::uint32_t k) {
      const double d2 = distance_squared(xj, positions[k]);
      if (d2 < r2max) s += kernel.radial(std::sqrt(d2));
    });
    sums[j] = s;
  }
  return sums;
}

std::vector<double> local_interaction_sums_reference(const kernels::RescaledKernel& kernel,
                                                     const Positions& positions) {
  const std::size_t n = positions.size();
  std::vector<double> sums(n, 0.0);
  std::vector<double> terms;
  terms.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    terms.clear();
    for (std::size_t k = 0; k < n; ++k) {
      terms.push_back(kernel.radial(std::sqrt(distance_squared(positions[j], positions[k]))));
    }
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double v : terms) s += v;
    sums[j] = s;
  }
  return sums;
}

double mean_candidates(const CellGrid& grid, const Positions& positions) {
  if (positions.empty()) return 0.0;
  std::size_t total = 0;
  for (std::size_t j = 0; j < positions.size(); ++j) {
    grid.for_each_candidate(positions[j], [&](std::uint32_t) { ++total; });
  }
  return static_cast<double>(total) / static_cast<double>(positions.size());
}

}  // namespace kpp::spatial
