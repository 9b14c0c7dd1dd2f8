#pragma once

#include <cstdint>
#include <string_view>

namespace wf {

// Deterministic splitmix64 stream. Used everywhere randomness is needed so
// results are reproducible across platforms and standard libraries.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0,1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Modulo bias is negligible for the ranges used here (n << 2^64).
    return n == 0 ? 0 : next() % n;
  }

private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent sub-seed for a named stage from a global seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
  SplitMix64 mix(seed ^ fnv1a64(stage));
  return mix.next();
}

} // namespace wf
