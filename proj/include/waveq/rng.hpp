#pragma once

#include <cstdint>
#include <cmath>
#include <limits>

namespace waveq {

/// splitmix64 step; used for seeding and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ generator with explicit (seed, stream) construction.
///
/// All randomness in the library flows through this class so that a run is
/// bit-reproducible across platforms: uniform and normal variates are built
/// from the raw 64-bit output by hand instead of going through the
/// implementation-defined std::*_distribution adaptors. Distinct stream ids
/// under one seed give statistically independent generators, which is how
/// replicate-level parallelism stays deterministic.
class Rng {
public:
  using result_type = std::uint64_t;

  Rng() : Rng(0x853c49e6748fea9bULL, 0) {}

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::uint64_t mix = seed ^ (stream * 0xD2B74407B1CE6E93ULL + 0x9E3779B97F4A7C15ULL);
    for (auto& word : state_) word = splitmix64(mix);
    // xoshiro must not start from the all-zero state
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  std::uint64_t operator()() { return next(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return std::numeric_limits<std::uint64_t>::max(); }

  /// Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [a, b).
  double uniform(double a, double b) { return a + uniform() * (b - a); }

  /// Uniform integer in [0, n), n >= 1 (Lemire multiply-shift).
  std::uint64_t uniform_index(std::uint64_t n) {
    const auto wide = static_cast<unsigned __int128>(next()) * n;
    return static_cast<std::uint64_t>(wide >> 64);
  }

  /// Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace waveq
