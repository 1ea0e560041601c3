#pragma once

#include <cstdint>
#include <random>

namespace idse {

// Deterministic generator shared by every randomized step (sketch signs, toy
// weights, synthetic images). The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; all derived draws below are computed
// here rather than through <random> distributions, whose algorithms are
// implementation defined.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). Uses rejection so the result is unbiased.
  std::uint64_t below(std::uint64_t n);

  /// +1 or -1 with equal probability, taken from the top bit of one draw.
  int sign() { return (next_u64() >> 63) != 0 ? -1 : 1; }

  /// Standard normal via Box-Muller (one draw per call, the pair's sine half is discarded).
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace idse
