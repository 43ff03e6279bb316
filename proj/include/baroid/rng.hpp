#pragma once

#include "baroid/types.hpp"

#include <cmath>
#include <cstdint>

namespace baroid {

/// Counter-derived SplitMix64 stream.  Cheap to seed, and independent
/// streams can be derived per (seed, index) pair, so batch generation is
/// reproducible regardless of how work is distributed over threads.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53 random bits
  Scalar next_unit() { return static_cast<Scalar>(next_u64() >> 11) * 0x1.0p-53; }

  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * next_unit(); }

  // standard normal via Box-Muller
  Scalar normal() {
    Scalar u1 = next_unit();
    Scalar u2 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

/// Mixes (seed, stream identifiers) into an independent SplitMix64 seed.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = seed;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    SplitMix64 s(h);
    h = s.next_u64();
  };
  mix(a);
  mix(b);
  return h;
}

}  // namespace baroid
