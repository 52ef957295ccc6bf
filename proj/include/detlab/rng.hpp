#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace detlab {

// All randomness flows from one root seed through named streams, so runs
// that share a root see matched scenes/initializations across regimes.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::mt19937_64 make_stream(uint64_t root, std::string_view name,
                                   uint64_t index = 0) {
  const uint64_t seed = splitmix64(splitmix64(root ^ fnv1a(name)) ^ index);
  return std::mt19937_64(seed);
}

// Distribution helpers with pinned bit-level behaviour (std distributions are
// implementation-defined).
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(rng() % span);
}

double normal(std::mt19937_64& rng);  // standard normal, Box-Muller

}  // namespace detlab
