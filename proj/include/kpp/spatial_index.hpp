#pragma once

#include "kpp/geometry.hpp"
#include "kpp/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace kpp::spatial {

using CellKey = std::array<std::int64_t, 3>;

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept;
};

/// Sparse cell list over an unbounded domain (d <= 3). Cells are cubes of
/// edge `cell_size` keyed by integer coordinates; a query at radius at most
/// `cell_size` only has to look at the 3^d cells around the query point.
class CellGrid {
 public:
  /// Rejects non-finite coordinates and cell_size <= 0.
  static CellGrid build(const Positions& positions, double cell_size);

  int dim() const { return dim_; }
  double cell_size() const { return cell_size_; }
  std::size_t particle_count() const { return count_; }
  std::size_t occupied_cells() const;
  /// Number of registered particles, counted cell by cell.
  std::size_t registered() const;

  CellKey key_of(std::span<const double> x) const;

  /// Registers particle `index` at `x` (used when particles are added
  /// between rebuilds, e.g. a newborn placed on its parent).
  void insert(std::uint32_t index, std::span<const double> x);

  /// Calls f(begin, end) for the ranges of build-time slots in the 3^d cells
  /// around x. Slot p holds particle order()[p] at sorted_position(p).
  template <class F>
  void for_each_slot_range(std::span<const double> x, F&& f) const {
    const CellKey centre = key_of(x);
    const int ny = dim_ >= 2 ? 3 : 1;
    const int nz = dim_ >= 3 ? 3 : 1;
    if (dense_) {
      // Cells are stored row by row along axis 0, so each row of three
      // neighbours is one contiguous range.
      const std::int64_t i0 = std::max(centre[0] - 1, lo_[0]);
      const std::int64_t i1 = std::min(centre[0] + 1, lo_[0] + extent_[0] - 1);
      if (i0 > i1) return;
      for (int l = 0; l < nz; ++l) {
        const std::int64_t k2 = centre[2] + (dim_ >= 3 ? l - 1 : 0);
        if (k2 < lo_[2] || k2 >= lo_[2] + extent_[2]) continue;
        for (int j = 0; j < ny; ++j) {
          const std::int64_t k1 = centre[1] + (dim_ >= 2 ? j - 1 : 0);
          if (k1 < lo_[1] || k1 >= lo_[1] + extent_[1]) continue;
          const std::int64_t row = ((k2 - lo_[2]) * extent_[1] + (k1 - lo_[1])) * extent_[0] - lo_[0];
          const std::uint32_t b = start_[static_cast<std::size_t>(row + i0)];
          const std::uint32_t e = start_[static_cast<std::size_t>(row + i1 + 1)];
          if (b < e) f(b, e);
        }
      }
      return;
    }
    CellKey k = centre;
    for (int i = 0; i < 3; ++i) {
      k[0] = centre[0] + i - 1;
      for (int j = 0; j < ny; ++j) {
        if (dim_ >= 2) k[1] = centre[1] + j - 1;
        for (int l = 0; l < nz; ++l) {
          if (dim_ >= 3) k[2] = centre[2] + l - 1;
          const auto it = cells_.find(k);
          if (it != cells_.end()) f(it->second.begin, it->second.end);
        }
      }
    }
  }

  /// Calls f(k) for the particles inserted after the build near x.
  template <class F>
  void for_each_inserted(std::span<const double> x, F&& f) const {
    if (extra_.empty()) return;
    const CellKey centre = key_of(x);
    CellKey k = centre;
    for (int i = 0; i < 3; ++i) {
      k[0] = centre[0] + i - 1;
      for (int j = 0; j < (dim_ >= 2 ? 3 : 1); ++j) {
        if (dim_ >= 2) k[1] = centre[1] + j - 1;
        for (int l = 0; l < (dim_ >= 3 ? 3 : 1); ++l) {
          if (dim_ >= 3) k[2] = centre[2] + l - 1;
          const auto it = extra_.find(k);
          if (it == extra_.end()) continue;
          for (std::uint32_t e : it->second) f(e);
        }
      }
    }
  }

  /// Calls f(k) for every particle k registered in the 3^d cells around x.
  template <class F>
  void for_each_candidate(std::span<const double> x, F&& f) const {
    for_each_slot_range(x, [&](std::uint32_t b, std::uint32_t e) {
      for (std::uint32_t p = b; p < e; ++p) f(order_[p]);
    });
    for_each_inserted(x, f);
  }

  /// Build-time particles in cell order.
  const std::vector<std::uint32_t>& order() const { return order_; }
  std::span<const double> sorted_position(std::size_t slot) const {
    return {sorted_.data() + slot * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  /// Particles registered through insert(), in insertion order.
  const std::vector<std::uint32_t>& inserted() const { return inserted_; }

 private:
  struct Cell {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
  };

  void fill_sorted(const Positions& positions);

  int dim_ = 1;
  double cell_size_ = 1.0;
  std::size_t count_ = 0;
  std::vector<std::uint32_t> order_;
  std::vector<double> sorted_;
  std::vector<std::uint32_t> inserted_;
  // Dense mode: CSR offsets over the bounding box of occupied cells, used
  // when that box holds at most a few cells per particle.
  bool dense_ = false;
  CellKey lo_{0, 0, 0};
  CellKey extent_{1, 1, 1};
  std::vector<std::uint32_t> start_;
  // Sparse mode.
  std::unordered_map<CellKey, Cell, CellKeyHash> cells_;
  // Particles added after the build.
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> extra_;
};

/// S_j = sum_k theta_eps(x_j - x_k), self term included. OpenMP-parallel over
/// particles against the immutable grid; needs cell_size >= C0 eps and
/// positions unchanged since the build (inserted particles excepted).
std::vector<double> local_interaction_sums(const CellGrid& grid, const kernels::RescaledKernel& kernel,
                                           const Positions& positions);

/// Brute-force O(n^2) serial reference; pair terms are summed in ascending
/// order for each j.
std::vector<double> local_interaction_sums_reference(const kernels::RescaledKernel& kernel,
                                                     const Positions& positions);

/// Average number of candidates inspected per particle (query-cost diagnostic).
double mean_candidates(const CellGrid& grid, const Positions& positions);

}  // namespace kpp::spatial
