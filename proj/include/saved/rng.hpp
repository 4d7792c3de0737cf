#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace saved {

/// Counter-based generator: the i-th draw of stream `s` under key `k` is
/// splitmix64(k ^ splitmix64(s) + (i+1) * 0x9E3779B97F4A7C15).
///
/// Every draw is a pure function of (key, stream, counter), so independent
/// streams can be handed to frames or layers without sharing state, and the
/// sequence is reproducible in any language with 64-bit unsigned arithmetic.
/// Normals use the Box-Muller transform on two consecutive uniforms and
/// return the cosine branch only.
class CounterRng {
 public:
  CounterRng(std::uint64_t key, std::uint64_t stream = 0) : base_(key ^ mix(stream)) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(base_ + counter_ * 0x9E3779B97F4A7C15ull);
  }

  /// Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0,1].
  double uniform_open_low() { return 1.0 - uniform(); }

  /// Uniform integer in [0, n) by rejection-free multiply-shift (n < 2^32).
  std::uint64_t below(std::uint64_t n) { return ((next_u64() >> 32) * n) >> 32; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = uniform_open_low();
    const double u2 = uniform();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

/// Derives a child key from a parent key and a tag, e.g. (seed, epoch).
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t tag) {
  return CounterRng::mix(key ^ CounterRng::mix(tag + 0x632BE59BD9B4E019ull));
}

}  // namespace saved
