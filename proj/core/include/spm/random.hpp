#pragma once

#include <cstdint>
#include <limits>

#include "spm/types.hpp"

namespace spm {

/// Counter-based 64-bit generator. The output for draw i is a SplitMix64
/// finalizer applied to (key + i * golden), so two generators with the same
/// key produce the same stream and streams can be forked without shared state.
///
/// Satisfies UniformRandomBitGenerator so it works with <random>
/// distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (counter_++) * kGolden); }

  /// Independent stream identified by (this key, stream id). Does not advance
  /// this generator.
  CounterRng fork(std::uint64_t stream) const;

  /// Convenience: stream for a (cell, trial) pair.
  CounterRng fork(std::uint64_t a, std::uint64_t b) const { return fork(a).fork(b); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; uses two uniforms per call.
  double normal();

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  CounterRng(std::uint64_t key, bool) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Gaussian vector normalized to the unit sphere, i.e. a Unif(S^{D-1}) draw.
Vector random_unit_vector(int dim, CounterRng& rng);

/// D x K matrix with independent Unif(S^{D-1}) columns.
Matrix random_unit_columns(int dim, int count, CounterRng& rng);

}  // namespace spm
