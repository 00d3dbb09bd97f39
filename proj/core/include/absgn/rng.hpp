// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace absgn {

/// Deterministic random source. mt19937 is fully specified by the standard;
/// the floating-point and integer transforms below are written out explicitly
/// (std::normal_distribution and friends are implementation-defined), so a
/// given seed yields the same stream on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    std::seed_seq seq{static_cast<uint32_t>(seed & 0xffffffffu),
                      static_cast<uint32_t>(seed >> 32)};
    eng_.seed(seq);
  }

  /// Uniform in [0,1) with 53 random bits.
  double uniform() {
    uint64_t hi = eng_() >> 5;  // 27 bits
    uint64_t lo = eng_() >> 6;  // 26 bits
    return double(hi * 67108864.0 + lo) * (1.0 / 9007199254740992.0);
  }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    int v = static_cast<int>(uniform() * n);
    return v < n ? v : n - 1;
  }

  /// Standard normal via Box-Muller, pair-cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0,1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Fisher-Yates with the explicit integer transform above.
  template <typename It>
  void shuffle(It first, It last) {
    auto n = static_cast<int>(last - first);
    for (int i = n - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(first[i], first[j]);
    }
  }

  /// Derive a child seed (splitmix64 finalizer over a combined word).
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace absgn
