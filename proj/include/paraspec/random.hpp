#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace paraspec::rng {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Combines a seed with stream coordinates into an independent 64-bit key.
inline std::uint64_t key(std::uint64_t seed, std::int64_t a, std::int64_t b = 0, std::int64_t c = 0) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0x6A09E667F3BCC909ull);
  h = splitmix64(h ^ static_cast<std::uint64_t>(a));
  h = splitmix64(h ^ static_cast<std::uint64_t>(b) * 0x9E3779B97F4A7C15ull);
  h = splitmix64(h ^ static_cast<std::uint64_t>(c) * 0xC2B2AE3D27D4EB4Full);
  return h;
}

/**
 * Small deterministic generator (splitmix64 stream) with a platform-independent
 * normal sampler. Standard-library distributions are implementation-defined,
 * which would break bit-exact replay across toolchains.
 */
class Stream {
 public:
  explicit Stream(std::uint64_t key) noexcept : state_(key) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  /// Uniform on (0, 1).
  double uniform() noexcept { return (double(next() >> 11) + 0.5) * 0x1.0p-53; }

  /// Pair of independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    auto [a, b] = normal_pair();
    spare_ = b;
    has_spare_ = true;
    return a;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace paraspec::rng
