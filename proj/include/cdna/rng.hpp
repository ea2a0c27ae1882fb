#pragma once

#include <cstdint>
#include <random>

namespace cdna {

using Rng = std::mt19937_64;

/// Uniform double in [lo, hi) built from the top 53 bits of one draw, so a
/// seed gives the same sequence with every standard library.
inline double uniform(Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

/// Uniform double in (lo, hi].
inline double uniform_open_closed(Rng& rng, double lo, double hi) { return hi - uniform(rng, 0.0, hi - lo); }

inline int uniform_int(Rng& rng, int n) { return static_cast<int>(uniform(rng, 0.0, 1.0) * n); }

inline bool bernoulli(Rng& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

/// splitmix64 finalizer; derives independent per-rep seeds from a master seed.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace cdna
