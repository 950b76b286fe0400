// Copyright 2026 lrsd authors
// SPDX-License-Identifier: Apache-2.0
//
// Counter-based deterministic random stream. std::normal_distribution is not
// required to produce identical sequences across standard library
// implementations, so sampling is done from raw 64-bit mixes with an explicit
// Box-Muller transform; identical seeds give identical instances everywhere.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace lrsd {

// Recorded in generated-instance metadata so instances can be tied to the
// exact sampling scheme.
inline const char* kGeneratorId = "splitmix64/boxmuller-v1";

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed) ^ (stream * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL))) {}

  std::uint64_t next_u64() { return mix(key_ + (++ctr_) * 0x9e3779b97f4a7c15ULL); }

  // Uniform on (0, 1]: 53-bit mantissa, never exactly 0 so log() is safe.
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() <= p; }

  // N(mean, std^2) via Box-Muller; the paired draw is cached.
  double normal(double mean = 0.0, double stddev = 1.0) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + stddev * spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + stddev * r * std::cos(theta);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace lrsd
