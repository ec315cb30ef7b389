#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace gbes {

// SplitMix64 step; used only to expand seeds into generator state.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent seed for a named sub-experiment (FNV-1a over the
// tag, mixed with the base seed). Keeps arm/suite streams disjoint without
// hand-numbering them.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  std::uint64_t s = seed ^ h;
  return splitmix64_next(s);
}

// xoshiro256++ with per-stream state derived from (seed, stream) via
// SplitMix64. One instance per simulated path: a fixed (seed, stream) pair
// always yields the same draw sequence, which is what common-random-number
// estimation across control policies relies on.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t init = seed;
    (void)splitmix64_next(init);
    init ^= 0xD1B54A32D192ED03ULL * (stream + 1);
    for (auto& word : s_) word = splitmix64_next(init);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1]; never returns 0 so it is safe under log().
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the second member of each pair is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    cached_ = mag * std::sin(ang);
    has_cached_ = true;
    return mag * std::cos(ang);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace gbes
