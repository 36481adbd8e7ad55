#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stego {

/// Seedable 64-bit PRNG with fully specified derived distributions.
///
/// The raw stream is std::mt19937_64 (the standard pins its output sequence),
/// and every distribution below is derived from raw draws by fixed arithmetic,
/// so generated test vectors are identical across platforms and standard
/// libraries:
///   uniform01: next_u64() >> 11, scaled by 2^-53
///   bit:       next_u64() & 1
///   uniform_int(n): masked draw for power-of-two n, otherwise rejection
///   normal:    Box-Muller on two uniform01 draws (second value cached)
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform over [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  uint32_t bit() { return static_cast<uint32_t>(next_u64() & 1u); }

  /// Uniform over {0, ..., n-1}.
  uint64_t uniform_int(uint64_t n) {
    if (n == 0) return 0;
    if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
    const uint64_t limit = n * (UINT64_MAX / n);
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1, u2;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Normal(0, stddev) with draws outside +-2 stddev rejected.
  double truncated_normal(double stddev) {
    double x;
    do {
      x = normal();
    } while (x < -2.0 || x > 2.0);
    return x * stddev;
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace stego
