#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace imbsam {

// All randomness in the library flows through these helpers. std::mt19937_64
// is bit-exact across platforms; the standard distributions are not, so the
// mappings from raw 64-bit draws to doubles/integers are spelled out here.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable derivation of independent seed streams from a base seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(splitmix64(base) ^ splitmix64(~salt));
}

using RngEngine = std::mt19937_64;

inline RngEngine make_engine(std::uint64_t seed) { return RngEngine(seed); }

// Uniform in [0, 1) with 53 significant bits.
inline double uniform01(RngEngine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform in [-1, 1).
inline double uniform_pm1(RngEngine& eng) { return 2.0 * uniform01(eng) - 1.0; }

// Unbiased integer in [0, n). Rejection sampling keeps the mapping exact.
inline std::uint64_t uniform_below(RngEngine& eng, std::uint64_t n) {
  const std::uint64_t threshold = (0ULL - n) % n;
  for (;;) {
    const std::uint64_t x = eng();
    if (x >= threshold) return x % n;
  }
}

// Standard normal via Box-Muller (cosine branch only, stateless).
inline double gaussian(RngEngine& eng) {
  double u1 = uniform01(eng);
  while (u1 <= 0.0) u1 = uniform01(eng);
  const double u2 = uniform01(eng);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(6.283185307179586476925286766559 * u2);
}

inline double rademacher(RngEngine& eng) { return (eng() & 1ULL) ? 1.0 : -1.0; }

template <typename Container>
void shuffle_indices(Container& idx, RngEngine& eng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(eng, i));
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace imbsam
