#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace khopfair {

// mt19937_64 with hand-rolled bounded draws and shuffles. std::shuffle and the
// std distributions are implementation-defined, which would make seeded runs
// differ across standard libraries; the raw engine output is pinned by the
// standard, so everything here is reproducible from the seed alone.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // uniform in [0, bound), bound >= 1, rejection sampling to kill modulo bias
  uint64_t below(uint64_t bound) {
    uint64_t x, r;
    do {
      x = eng_();
      r = x % bound;
    } while (x - r > uint64_t(0) - bound);
    return r;
  }

  // uniform in [0, 1) with 53 random bits
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  // Fisher-Yates applied to the first `take` slots only
  template <typename T>
  void partial_shuffle(std::vector<T>& v, std::size_t take) {
    for (std::size_t i = 0; i < take && i + 1 < v.size(); ++i) {
      std::swap(v[i], v[i + below(v.size() - i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace khopfair
