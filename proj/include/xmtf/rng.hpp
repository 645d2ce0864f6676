#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "xmtf/hash.hpp"

namespace xmtf {

// All randomized stages draw through the helpers below rather than the
// standard <random> distributions, whose output is implementation-defined.
// std::mt19937_64 itself is fully specified, so seeded runs reproduce
// bit-identically on any conforming platform.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent substream seed for a named partition (e.g. one per language).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  std::uint64_t state = base ^ fnv1a64(label);
  return splitmix64(state);
}

// Unbiased integer in [0, n) by rejection sampling.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n <= 1) return 0;
  // Smallest power-of-two mask covering n-1.
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    std::uint64_t v = rng() & mask;
    if (v < n) return v;
  }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Fisher-Yates with the rejection sampler above.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace xmtf
