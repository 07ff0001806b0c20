#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace seqmix::rng {

// 64-bit finalizer (splitmix64) used to derive independent streams from a
// user seed, so e.g. bootstrap replicate b is reproducible on its own.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(mix(mix(seed) ^ stream));
}

// Uniform in [0,1) from the top 53 bits. Distribution objects from <random>
// are implementation-defined, so we draw bits directly to keep results
// identical across standard libraries.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double exponential(std::mt19937_64& g) {
  return -std::log1p(-uniform01(g));
}

inline int uniform_int(std::mt19937_64& g, int n) {
  return static_cast<int>(g() % static_cast<std::uint64_t>(n));
}

inline std::vector<int> permutation(std::mt19937_64& g, int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(p[i], p[uniform_int(g, i + 1)]);
  return p;
}

}  // namespace seqmix::rng
