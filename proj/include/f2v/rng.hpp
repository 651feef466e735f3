#pragma once

#include "f2v/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace f2v {

/// Seeded 64-bit generator used everywhere randomness is needed.
///
/// std::mt19937_64 output is fully specified by the standard, and the
/// mappings below avoid the implementation-defined std distributions,
/// so identical seeds give bit-identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Unbiased draw from [0, n) by rejecting the short tail of 2^64 % n values.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error("Rng::below requires n >= 1");
    const std::uint64_t reject_under = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t draw = engine_();
      if (draw >= reject_under) return draw % n;
    }
  }

  /// Uniform in [0, 1) with 53 random bits.
  Scalar unit() { return static_cast<Scalar>(engine_() >> 11) * 0x1.0p-53; }

  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * unit(); }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::uint64_t i = values.size(); i > 1; --i) {
      const std::uint64_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace f2v
