// SPDX-License-Identifier: Apache-2.0
//
// Deterministic RNG used everywhere randomness is needed. Uniform doubles are
// built from raw 64-bit draws so streams are reproducible bit-for-bit across
// standard library implementations.

#pragma once

#include <cstdint>
#include <random>

#include "dualrot/types.hpp"

namespace dualrot {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double angle() { return uniform(0.0, 2.0 * kPi); }

  int uniform_int(int count) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(count)); }

  // Independent child stream; parallel cells use derive(master, cell_index)
  // so scheduling order cannot affect results.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

inline cvec random_phase_vector(Rng& rng, int n) {
  cvec v(n);
  for (int i = 0; i < n; ++i) {
    const double phase = rng.angle();
    v[i] = cd(std::cos(phase), std::sin(phase));
  }
  return v;
}

} // namespace dualrot
