#pragma once

#include "kpp/geometry.hpp"

#include <cstdint>
#include <random>

namespace kpp::testing {

/// n points uniform in [lo, hi]^d.
inline Positions uniform_points(int dim, std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Positions p(dim);
  p.coords.resize(n * static_cast<std::size_t>(dim));
  for (double& c : p.coords) c = u(gen);
  return p;
}

}  // namespace kpp::testing
