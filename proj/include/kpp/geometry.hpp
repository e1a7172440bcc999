#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace kpp {

/// Flat storage of n points in R^d, coordinates of point i at [i*d, (i+1)*d).
struct Positions {
  int dim = 1;
  std::vector<double> coords;

  Positions() = default;
  explicit Positions(int d) : dim(d) {
    if (d < 1) throw std::invalid_argument("dimension must be positive");
  }
  Positions(int d, std::vector<double> c) : dim(d), coords(std::move(c)) {
    if (d < 1) throw std::invalid_argument("dimension must be positive");
    if (coords.size() % static_cast<std::size_t>(d) != 0) {
      throw std::invalid_argument("coordinate count is not a multiple of the dimension");
    }
  }

  std::size_t size() const { return coords.size() / static_cast<std::size_t>(dim); }
  bool empty() const { return coords.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
  std::span<double> operator[](std::size_t i) {
    return {coords.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }

  void push_back(std::span<const double> p) { coords.insert(coords.end(), p.begin(), p.end()); }
};

inline double distance_squared(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace kpp
