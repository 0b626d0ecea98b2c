#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace vadrules::detail {

/// Deterministic RNG with portable draws. mt19937_64 output is fully
/// specified by the standard; the helpers below avoid the distribution
/// classes, whose algorithms are implementation-defined, so sequences are
/// identical across compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Unbiased draw from [0, n) via rejection sampling.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform draw from [lo, hi], inclusive.
  std::uint64_t next_in(std::uint64_t lo, std::uint64_t hi) {
    if (hi < lo) throw std::invalid_argument("next_in: empty range");
    return lo + next_below(hi - lo + 1);
  }

  /// Uniform double in [0, 1) with 53-bit resolution.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("sample_indices: k exceeds population");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(next_below(n - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vadrules::detail
