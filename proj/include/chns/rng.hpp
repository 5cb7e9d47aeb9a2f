#pragma once

#include <cstdint>

#include "chns/grid.hpp"

// Small deterministic generator (splitmix64 core) so runs are reproducible
// bit-for-bit across platforms regardless of the standard library's
// distribution implementations.

namespace chns {

struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

// Node-by-node uniform fill in index order.
inline void random_fill(Rng& rng, ScalarField& f, double lo, double hi) {
  for (double& x : f.v) x = rng.uniform(lo, hi);
}

inline void random_fill(Rng& rng, VectorField& v, double lo, double hi) {
  for (std::size_t i = 0; i < v.x.size(); ++i) {
    v.x[i] = rng.uniform(lo, hi);
    v.y[i] = rng.uniform(lo, hi);
  }
}

} // namespace chns
