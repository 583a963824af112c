// Deterministic random number generation.
//
// All randomness in windmix flows through Rng so that results are
// reproducible bit-for-bit from a root seed. Independent logical streams are
// derived with derive_seed(seed, a, b, c); the fitting code keys sub-streams
// on (restart, iteration, item) so parallel and sequential evaluation orders
// produce identical output.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace windmix {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// xoshiro256** seeded through splitmix64. One instance per logical stream;
// instances are never shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      word = detail::mix64(x);
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t x = detail::mix64(seed + 0x9e3779b97f4a7c15ULL);
    x = detail::mix64(x ^ (a + 0xbf58476d1ce4e5b9ULL));
    x = detail::mix64(x ^ (b + 0x94d049bb133111ebULL));
    x = detail::mix64(x ^ (c + 0x2545f4914f6cdd1dULL));
    return x;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1); safe under log().
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  // Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below: n must be > 0");
    return next_u64() % n;  // modulo bias ~n/2^64, irrelevant for small n
  }

  // Standard normal via Box-Muller; two uniforms per draw keeps the stream
  // layout independent of any rejection history.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be > 0");
    if (shape < 1.0) {
      const double u = uniform_open();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double exponential() { return -std::log(uniform_open()); }

  double weibull(double scale, double shape) {
    return scale * std::pow(exponential(), 1.0 / shape);
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace windmix
