#pragma once
// Deterministic random helpers.
//
// std::uniform_int_distribution and std::sample are implementation-defined,
// so every draw here is spelled out explicitly on top of mt19937_64. Given
// the same seed the whole library produces bit-identical results on any
// conforming platform.

#include <cstdint>
#include <random>
#include <vector>

namespace srkbqa {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased draw from [0, n) via rejection sampling. n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n + 1) % n;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x <= limit) return x % n;
    }
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform double in [lo, hi).
  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

  bool bernoulli(double p) { return uniform_real() < p; }

  // Partial Fisher-Yates: the first k slots of `items` end up holding a
  // uniform random k-subset, in random order.
  template <typename T>
  void partial_shuffle(std::vector<T>& items, std::size_t k) {
    if (k > items.size()) k = items.size();
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + uniform_index(items.size() - i);
      std::swap(items[i], items[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    if (!items.empty()) partial_shuffle(items, items.size());
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace srkbqa
