#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace mcplan {

using State = int32_t;
using Action = int32_t;

/// Seedable RNG used everywhere. The uniform/int draws are derived from raw
/// mt19937_64 words so that a given seed reproduces the identical stream on
/// any platform, which keeps generated MDPs and runs bit-reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  int64_t below(int64_t n) {
    if (n <= 0) throw std::domain_error("Rng::below: n must be positive");
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return static_cast<int64_t>(x % un);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

/// sigma(m) = sum_{i=0}^{m-1} gamma^i, the maximal discounted reward over m
/// steps. Caps every value bound; sigma(0) = 0.
inline double discount_cap(int m, double gamma) {
  double total = 0.0;
  double g = 1.0;
  for (int i = 0; i < m; ++i) {
    total += g;
    g *= gamma;
  }
  return total;
}

/// Mixes a base seed into an independent stream id. Used to derive the
/// episode seed from the MDP seed so the two streams never overlap.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace mcplan
