#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "conelab/vec.hpp"

namespace conelab {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, for turning stream names into 64-bit keys.
constexpr std::uint64_t hash_name(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based generator: the i-th draw of stream (seed, name) is
/// mix64(mix64(seed ^ key) + i). Draws are addressable without state, so
/// property suites reproduce from (seed, stream, counter) alone.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view stream = "default")
      : key_(mix64(seed ^ hash_name(stream))) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix64(seed ^ mix64(stream))) {}

  std::uint64_t at(std::uint64_t i) const { return mix64(key_ + i * 0x9e3779b97f4a7c15ULL); }
  std::uint64_t next_u64() { return at(counter_++); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi_inclusive - lo + 1));
  }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  Vec3 unit_vector() {
    for (;;) {
      const Vec3 v{normal(), normal(), normal()};
      const double n = norm(v);
      if (n > 1e-12) return v / n;
    }
  }
  Vec3 in_ball(const Vec3& c, double r) {
    for (;;) {
      const Vec3 v{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
      if (norm2(v) <= 1.0) return c + v * r;
    }
  }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Uniformly random rotation (via a random unit quaternion).
inline Mat3 random_rotation(CounterRng& rng) {
  double q[4];
  double n = 0.0;
  do {
    n = 0.0;
    for (double& v : q) {
      v = rng.normal();
      n += v * v;
    }
  } while (n < 1e-12);
  n = std::sqrt(n);
  const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
  return Mat3::from_rows({1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
                          2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
                          2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)});
}

/// Radical inverse in the given prime base: the Halton coordinate of index i.
inline double halton(std::uint64_t i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

inline constexpr unsigned kHaltonPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

}  // namespace conelab
