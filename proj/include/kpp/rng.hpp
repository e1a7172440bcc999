#pragma once

// Counter-based random streams. Every stream is a SplitMix64 sequence whose
// starting point is derived by hashing a tuple of integers (master seed,
// step, lineage key, purpose, ...). Draws therefore depend only on that
// tuple, never on thread scheduling or on how particles are partitioned.

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace kpp::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = mix(h ^ mix(p));
  return h;
}

/// UniformRandomBitGenerator over a keyed counter.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit CounterEngine(std::uint64_t key) : state_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Purpose tags keep streams for different uses of the same tuple apart.
enum class Stream : std::uint64_t {
  initial = 1,
  diffusion = 2,
  events = 3,
  thinning = 4,
  replicate = 5,
  study = 6,
};

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace kpp::rng
