#pragma once

#include <cstdint>
#include <random>

namespace rcm4 {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream splitting rule: the engine for (master, index) is seeded with eight
/// 32-bit words drawn from splitmix64 started at master ^ (index * φ64), where
/// φ64 = 0x9E3779B97F4A7C15. Streams for distinct indices are independent
/// for all practical purposes and do not depend on thread scheduling.
inline Engine make_stream(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (index * 0x9E3779B97F4A7C15ULL);
  std::uint32_t words[8];
  for (int i = 0; i < 8; i += 2) {
    const std::uint64_t z = splitmix64(s);
    words[i] = static_cast<std::uint32_t>(z);
    words[i + 1] = static_cast<std::uint32_t>(z >> 32);
  }
  std::seed_seq seq(words, words + 8);
  return Engine(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Engine& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

/// Fair coin / uniform colour in {0,1,2,3} from the top bits.
inline int uniform_sign(Engine& g) { return (g() >> 63) ? 1 : -1; }
inline int uniform_color4(Engine& g) { return static_cast<int>(g() >> 62); }

}  // namespace rcm4
