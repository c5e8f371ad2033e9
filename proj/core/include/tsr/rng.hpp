#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tsr {

// Deterministic random source. All distributions are hand-rolled on top of
// mt19937_64 because std:: distributions are implementation-defined and the
// model files must be reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = eng_();
    while (x >= limit) x = eng_();
    return x % n;
  }

  // Uniform in [0, 1).
  double unitReal() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.
  double normal() {
    if (haveSpare_) {
      haveSpare_ = false;
      return spare_;
    }
    double u = 0.0;
    while (u <= 0.0) u = unitReal();
    const double v = unitReal();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double twoPi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(twoPi * v);
    haveSpare_ = true;
    return r * std::cos(twoPi * v);
  }

 private:
  std::mt19937_64 eng_;
  bool haveSpare_ = false;
  double spare_ = 0.0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream derived from a user seed. Stream ids keep the fold
// subsampling draw and the dictionary initialization draw decoupled.
inline Rng rngStream(std::uint32_t seed, std::uint32_t streamId) {
  return Rng(splitmix64((static_cast<std::uint64_t>(streamId) << 32) | seed));
}

// k distinct indices from [0, n), ascending. Partial Fisher-Yates.
std::vector<std::size_t> sampleWithoutReplacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace tsr
