#pragma once

#include <cstdint>
#include <random>

namespace toric {

// Seedable, splittable random source. Child streams are derived from the
// root seed and a stream id, so parallel workers can draw independently
// without sharing state and a run is reproducible from a single seed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), engine_(mix(seed, 0x6a09e667f3bcc909ull)) {}

  // Independent stream keyed by (root seed, stream id).
  Rng child(uint64_t stream) const { return Rng(mix(seed_, stream), 0); }

  // Uniform double in [0, 1).
  double uniform() {
    return (engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    std::uniform_int_distribution<uint64_t> dist(0, n - 1);
    return dist(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Normal(0, 1).
  double gauss() {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  Rng(uint64_t seed, int) : seed_(seed), engine_(mix(seed, 0x6a09e667f3bcc909ull)) {}

  // splitmix64 finalizer over a keyed state.
  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace toric
