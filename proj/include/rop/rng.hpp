#pragma once

// Seeded random streams. Every randomized procedure in the library draws
// from a substream keyed on (seed, stream index) so that parallel execution
// order cannot change results and identical seeds reproduce identical runs.
// Uniform and normal draws are generated explicitly (not via std::*_distribution)
// to keep the byte-level stream independent of the standard library version.

#include <cstdint>
#include <cmath>
#include <random>
#include <span>
#include <vector>

namespace rop {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent generator for (seed, stream). Streams with distinct indices
/// are decorrelated by splitmix64 mixing.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  s ^= stream * 0x9E3779B97F4A7C15ULL;
  const std::uint64_t b = splitmix64(s);
  std::seed_seq seq{static_cast<unsigned>(a), static_cast<unsigned>(a >> 32),
                    static_cast<unsigned>(b), static_cast<unsigned>(b >> 32)};
  return std::mt19937_64(seq);
}

/// Stable derived seed for nested procedures (replicates, routes).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
  return splitmix64(s);
}

/// Uniform draw strictly inside (0, 1).
inline double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller; two uniforms per draw, no cached state.
inline double normal01(std::mt19937_64& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

/// Chi-square draw with integer df as a sum of squared normals.
inline double chisq_draw(std::mt19937_64& rng, int df) {
  double s = 0.0;
  for (int i = 0; i < df; ++i) {
    const double z = normal01(rng);
    s += z * z;
  }
  return s;
}

/// Uniform integer in [0, n). Multiply-shift; bias is below n / 2^64.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

template <typename T>
inline void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

/// First k elements of a random permutation of {0, .., n-1}.
inline std::vector<std::uint32_t> sample_without_replacement(std::mt19937_64& rng,
                                                             std::uint32_t n,
                                                             std::uint32_t k) {
  std::vector<std::uint32_t> idx(n);
  for (std::uint32_t i = 0; i < n; ++i) idx[i] = i;
  for (std::uint32_t i = 0; i < k && i + 1 < n; ++i)
    std::swap(idx[i], idx[i + uniform_below(rng, n - i)]);
  idx.resize(k);
  return idx;
}

}  // namespace rop
