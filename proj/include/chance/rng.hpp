#pragma once

// Portable seeded randomness. std::mt19937_64 is bit-specified by the
// standard; the distributions in <random> are not, so uniform draws and
// shuffles are derived here from raw 64-bit outputs:
//   uniform01: top 53 bits scaled by 2^-53, giving [0, 1).
//   below(n):  rejection sampling on the raw output (no modulo bias).
//   shuffle:   Fisher-Yates from the back, j = below(i + 1).

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace chance {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  bool bernoulli(double prob) { return uniform01() < prob; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace chance
