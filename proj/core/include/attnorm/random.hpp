#pragma once

#include "attnorm/geometry.hpp"

#include <cstdint>
#include <random>

namespace attnorm {

/// Seeded generator whose derived draws are specified bit-for-bit here rather
/// than by the standard library's distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);
  /// Standard normal (Box-Muller, one value per call).
  double normal();
  Vec3 unit_vector();
  /// Uniformly distributed rotation.
  Mat3 rotation();

private:
  std::mt19937_64 engine_;
};

}  // namespace attnorm
