#pragma once

#include <cmath>
#include <cstdint>

#include "seglab/error.hpp"

namespace seglab {

// Counter-based generator: the i-th output is a pure function of (key, i),
// so identical seeds give identical streams on every platform, and child
// streams never overlap the parent because they mix a fresh key.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed + GOLDEN) ^ mix(stream + FLEA))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * GOLDEN); }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double next_in(double lo, double hi) {
    require(lo <= hi, ErrorKind::Range, "uniform interval is reversed");
    return lo + (hi - lo) * next_unit();
  }

  // Unbiased integer in [0, n) via rejection on the top of the range.
  std::uint64_t next_below(std::uint64_t n) {
    require(n > 0, ErrorKind::Range, "integer draw from an empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Box-Muller using two fresh uniforms per draw; the sine half is discarded
  // so the generator state stays a plain counter.
  double next_normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = 1.0 - next_unit();  // (0, 1]
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586477 * u2);
  }

  // Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const {
    Rng child(0);
    child.key_ = mix(key_ ^ mix(stream + FLEA));
    child.counter_ = 0;
    return child;
  }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      std::uint64_t j = next_below(i);
      auto tmp = first[i - 1];
      first[i - 1] = first[j];
      first[j] = tmp;
    }
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t FLEA = 0xD1B54A32D192ED03ull;

  // Finaliser from the splitmix construction; bijective on 64-bit words.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Named child streams so unrelated concerns draw from disjoint sequences.
namespace stream {
constexpr std::uint64_t init = 1;      // parameter initialisation
constexpr std::uint64_t shuffle = 2;   // epoch shuffles (split again by epoch)
constexpr std::uint64_t data = 3;      // synthetic data (split again by image)
constexpr std::uint64_t gradcheck = 4; // coordinate sampling
constexpr std::uint64_t trial = 5;     // per-trial seeds in studies
}  // namespace stream

}  // namespace seglab
