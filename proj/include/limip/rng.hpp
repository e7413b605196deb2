#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace limip {

// Deterministic RNG. All sampling goes through the explicit helpers below, never
// through std::*_distribution, so streams are reproducible across standard
// library implementations.
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(uint64_t seed) : gen(seed) {}

  uint64_t next() { return gen(); }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n), n > 0. Rejection-free multiply-shift bounding.
  uint64_t below(uint64_t n);

  // Inclusive on both ends.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<uint64_t>(hi - lo) + 1));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }
};

// Mixes (seed, stream label, index) into an independent seed so that modules
// never share or reorder each other's draws.
uint64_t mix_seed(uint64_t seed, std::string_view stream, uint64_t index = 0);

inline Rng derive_rng(uint64_t seed, std::string_view stream, uint64_t index = 0) {
  return Rng(mix_seed(seed, stream, index));
}

}  // namespace limip
