#pragma once

#include <cstdint>
#include <random>

namespace l2map {

using Rng = std::mt19937_64;

/// Independent stream keyed by (master seed, episode index, purpose). Used so
/// that every episode owns its randomness regardless of scheduling order.
inline Rng derive_stream(std::uint64_t master, std::uint64_t index, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), purpose};
  return Rng(seq);
}

/// Stream purposes.
inline constexpr std::uint32_t kEnvStream = 0;
inline constexpr std::uint32_t kPolicyStream = 1;

/// Uniform double in [0,1) with a fixed, implementation-independent recipe.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) by rejection, independent of the standard
/// library's distribution implementation.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace l2map
