#pragma once

// Scalar fields on uniform Cartesian grids (d <= 3), shared by the density
// estimates and the PDE solver.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kpp {

struct GridSpec {
  int dim = 1;
  std::array<std::int64_t, 3> counts{1, 1, 1};  ///< nodes per axis
  std::array<double, 3> origin{0.0, 0.0, 0.0};  ///< coordinates of node 0
  double spacing = 1.0;

  std::size_t size() const;
  double cell_volume() const;
  /// Coordinates of node `index`; axis 0 varies fastest.
  void node(std::size_t index, std::span<double> x) const;
  std::array<std::int64_t, 3> unflatten(std::size_t index) const;
  std::size_t flatten(const std::array<std::int64_t, 3>& ijk) const;
  /// Upper corner of the node box along each axis.
  double upper(int axis) const { return origin[axis] + spacing * static_cast<double>(counts[axis] - 1); }
  bool same_as(const GridSpec& other) const;
  void validate() const;
};

/// Nodes -m h, ..., m h per axis with m = ceil(L / h).
GridSpec symmetric_grid(int dim, double half_width, double spacing);

struct SmoothedField {
  GridSpec grid;
  std::vector<double> values;
  double time = 0.0;
  /// Mass of particles whose smoothing support leaves the grid (0 for PDE fields).
  double clipped_mass = 0.0;

  SmoothedField() = default;
  SmoothedField(GridSpec g, double t);

  /// Sum of node values times the cell volume.
  double integral() const;
  double max() const;
};

/// Values of `fine` at the nodes of `target`, every one of which must
/// coincide with a node of `fine`.
SmoothedField restrict_to(const SmoothedField& fine, const GridSpec& target);

/// Columns: time,x1[,x2[,x3]],value.
void write_field_csv(std::ostream& out, const SmoothedField& field, bool header = true);

/// Little-endian binary layout:
///   8 bytes magic "KPPFLD1\0", uint32 d,
///   d x (int64 count, float64 origin), float64 spacing, float64 time,
///   prod(count) float64 values, axis 0 fastest.
void write_field_binary(std::ostream& out, const SmoothedField& field);
SmoothedField read_field_binary(std::istream& in);

}  // namespace kpp
