#include "kpp/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace kpp {

namespace {

constexpr char kMagic[8] = {'K', 'P', 'P', 'F', 'L', 'D', '1', '\0'};

static_assert(std::endian::native == std::endian::little, "binary field I/O assumes a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("binary field: truncated input");
  return v;
}

}  // namespace

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(counts[a]);
  return n;
}

double GridSpec::cell_volume() const { return std::pow(spacing, dim); }

std::array<std::int64_t, 3> GridSpec::unflatten(std::size_t index) const {
  std::array<std::int64_t, 3> ijk{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    ijk[a] = static_cast<std::int64_t>(index % static_cast<std::size_t>(counts[a]));
    index /= static_cast<std::size_t>(counts[a]);
  }
  return ijk;
}

std::size_t GridSpec::flatten(const std::array<std::int64_t, 3>& ijk) const {
  std::size_t index = 0;
  for (int a = dim - 1; a >= 0; --a) index = index * static_cast<std::size_t>(counts[a]) + static_cast<std::size_t>(ijk[a]);
  return index;
}

void GridSpec::node(std::size_t index, std::span<double> x) const {
  const auto ijk = unflatten(index);
  for (int a = 0; a < dim; ++a) x[a] = origin[a] + spacing * static_cast<double>(ijk[a]);
}

bool GridSpec::same_as(const GridSpec& o) const {
  if (dim != o.dim || spacing != o.spacing) return false;
  for (int a = 0; a < dim; ++a) {
    if (counts[a] != o.counts[a] || origin[a] != o.origin[a]) return false;
  }
  return true;
}

void GridSpec::validate() const {
  if (dim < 1 || dim > 3) throw std::invalid_argument("grid: dimension must be 1, 2 or 3");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw std::invalid_argument("grid: spacing must be positive");
  for (int a = 0; a < dim; ++a) {
    if (counts[a] < 1) throw std::invalid_argument("grid: empty axis");
  }
}

GridSpec symmetric_grid(int dim, double half_width, double spacing) {
  GridSpec g;
  g.dim = dim;
  g.spacing = spacing;
  g.validate();
  if (!(half_width > 0.0)) throw std::invalid_argument("grid: half width must be positive");
  const auto m = static_cast<std::int64_t>(std::ceil(half_width / spacing - 1e-9));
  for (int a = 0; a < dim; ++a) {
    g.counts[a] = 2 * m + 1;
    g.origin[a] = -static_cast<double>(m) * spacing;
  }
  return g;
}

SmoothedField::SmoothedField(GridSpec g, double t) : grid(g), values(g.size(), 0.0), time(t) {}

double SmoothedField::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

double SmoothedField::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

SmoothedField restrict_to(const SmoothedField& fine, const GridSpec& target) {
  target.validate();
  if (target.dim != fine.grid.dim) throw std::invalid_argument("restrict: dimension mismatch");
  SmoothedField out(target, fine.time);
  out.clipped_mass = fine.clipped_mass;
  const double h = fine.grid.spacing;
  double x[3];
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    target.node(i, {x, 3});
    std::array<std::int64_t, 3> ijk{0, 0, 0};
    for (int a = 0; a < target.dim; ++a) {
      const double k = (x[a] - fine.grid.origin[a]) / h;
      const double r = std::round(k);
      if (std::abs(k - r) > 1e-6 || r < 0 || r > static_cast<double>(fine.grid.counts[a] - 1)) {
        throw std::invalid_argument("restrict: target node is not a node of the source grid");
      }
      ijk[a] = static_cast<std::int64_t>(r);
    }
    out.values[i] = fine.values[fine.grid.flatten(ijk)];
  }
  return out;
}

void write_field_csv(std::ostream& out, const SmoothedField& field, bool header) {
  const int d = field.grid.dim;
  if (header) {
    out << "time";
    for (int a = 1; a <= d; ++a) out << ",x" << a;
    out << ",value\n";
  }
  out << std::setprecision(17);
  double x[3];
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    field.grid.node(i, {x, 3});
    out << field.time;
    for (int a = 0; a < d; ++a) out << ',' << x[a];
    out << ',' << field.values[i] << '\n';
  }
}

void write_field_binary(std::ostream& out, const SmoothedField& field) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(field.grid.dim));
  for (int a = 0; a < field.grid.dim; ++a) {
    put<std::int64_t>(out, field.grid.counts[a]);
    put<double>(out, field.grid.origin[a]);
  }
  put<double>(out, field.grid.spacing);
  put<double>(out, field.time);
  out.write(reinterpret_cast<const char*>(field.values.data()),
            static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("binary field: write failed");
}

SmoothedField read_field_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("binary field: bad magic");
  GridSpec g;
  g.dim = static_cast<int>(get<std::uint32_t>(in));
  if (g.dim < 1 || g.dim > 3) throw std::runtime_error("binary field: unsupported dimension");
  for (int a = 0; a < g.dim; ++a) {
    g.counts[a] = get<std::int64_t>(in);
    g.origin[a] = get<double>(in);
  }
  g.spacing = get<double>(in);
  g.validate();
  SmoothedField f(g, get<double>(in));
  in.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("binary field: truncated values");
  return f;
}

}  // namespace kpp
