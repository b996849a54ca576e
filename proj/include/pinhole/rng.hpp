// Copyright 2026 The Pinhole Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PINHOLE_RNG_HPP_
#define PINHOLE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace pinhole {

/// SplitMix64 finalizer. Used to derive independent seeds from
/// (base seed, stream tag, counter) triples.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed derivation: the result depends only on the three
/// arguments, never on call order.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t counter = 0) {
  return mix64(mix64(base ^ mix64(stream)) + counter);
}

// Named streams so that unrelated consumers of one base seed never share a
// sequence.
namespace streams {
inline constexpr std::uint64_t kPopulation = 0x706f70;       // "pop"
inline constexpr std::uint64_t kCohort = 0x636f68;           // "coh"
inline constexpr std::uint64_t kResidualMap = 0x726d6170;    // "rmap"
inline constexpr std::uint64_t kResidualNoise = 0x726e6f69;  // "rnoi"
inline constexpr std::uint64_t kAssignment = 0x61736e;       // "asn"
inline constexpr std::uint64_t kTrials = 0x74726c;           // "trl"
}  // namespace streams

/// Portable seeded generator. std::mt19937_64 output is fully specified by
/// the standard; the distribution code below is ours, so sequences are
/// identical across standard libraries (unlike std::normal_distribution).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  /// Standard normal via Box-Muller. Both variates of a pair are used.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pinhole

#endif  // PINHOLE_RNG_HPP_
