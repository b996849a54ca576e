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

#ifndef PINHOLE_MAPPING_HPP_
#define PINHOLE_MAPPING_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pinhole/embedding.hpp"

namespace pinhole {

/// How the pseudo-speaker vector is drawn from a cohort. Every strategy
/// operates on cohort speaker means (sorted by spk_id), never on raw
/// utterances.
struct PseudoStrategy {
  enum class Kind {
    kFixedMember,       // speaker mean at member_index
    kRandomMember,      // one seeded uniform pick
    kAverageAll,        // mean of all speaker means
    kRandomKAverage,    // mean of k seeded picks without replacement
    kFarthestKAverage,  // mean of the k means farthest (cosine) from a source
  };

  Kind kind = Kind::kAverageAll;
  std::size_t k = 10;
  std::size_t member_index = 0;

  static PseudoStrategy fixed_member(std::size_t index) { return {Kind::kFixedMember, 1, index}; }
  static PseudoStrategy random_member() { return {Kind::kRandomMember, 1, 0}; }
  static PseudoStrategy average_all() { return {Kind::kAverageAll, 1, 0}; }
  static PseudoStrategy random_k_average(std::size_t k) { return {Kind::kRandomKAverage, k, 0}; }
  static PseudoStrategy farthest_k_average(std::size_t k) {
    return {Kind::kFarthestKAverage, k, 0};
  }

  /// True when the strategy's output depends on the draw seed.
  bool is_random() const;
};

std::string_view to_string(PseudoStrategy::Kind kind);
PseudoStrategy::Kind parse_strategy_kind(std::string_view name);

/// Strategies that play the same role under the two assignment modes:
/// {fixed-member, random-member} -> "member", {average-all, random-k-average}
/// -> "average", farthest-k-average -> "farthest".
std::string_view strategy_family(PseudoStrategy::Kind kind);

enum class MappingMode { kAnyToOne, kAnyToAny };

std::string_view to_string(MappingMode mode);
MappingMode parse_mapping_mode(std::string_view name);

/// Embedding-space anonymizer:
///
///   y_i = normalize((1 - rho) * p_i + rho * R x_i + e_i),  e_i ~ N(0, noise_sigma^2 I)
///
/// with x_i the length-normalized source vector, R the seeded orthogonal
/// residual map, and p_i the pseudo-speaker vector (shared by every utterance
/// in a2o mode, drawn per utterance in a2a mode).
struct MappingConfig {
  PseudoStrategy strategy;
  MappingMode mode = MappingMode::kAnyToOne;
  double rho = 0.2;
  double noise_sigma = 0.08;
  std::uint64_t residual_seed = 0;
  std::uint64_t assignment_seed = 0;
  /// Use R = I instead of the seeded rotation. Only for sanity checks.
  bool identity_residual = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

nlohmann::json to_json(const MappingConfig& config);
/// Throws ConfigError naming the offending field.
MappingConfig mapping_config_from_json(const nlohmann::json& j);

/// Seeded d x d orthogonal matrix: Gaussian draw, Householder QR, then each
/// column's first nonzero entry made nonnegative.
struct ResidualMap {
  Matrix matrix;
};

ResidualMap residual_map(std::size_t dim, std::uint64_t residual_seed);

/// Unit-norm pseudo-speaker vector for `strategy` over `cohort`. The
/// farthest-k strategy needs `source_mean`. Throws ConfigError for k larger
/// than the cohort, an out-of-range member index, or a missing source.
Vector select_pseudo(const PseudoStrategy& strategy, const EmbeddingSet& cohort,
                     const std::optional<Vector>& source_mean, std::uint64_t draw_seed);

/// Anonymized set plus the pseudo vector used for each record (record order).
struct AnonymizationResult {
  EmbeddingSet set;
  std::vector<Vector> pseudo;
};

AnonymizationResult anonymize_detailed(const EmbeddingSet& set, const EmbeddingSet& cohort,
                                       const MappingConfig& config);

EmbeddingSet anonymize(const EmbeddingSet& set, const EmbeddingSet& cohort,
                       const MappingConfig& config);

/// 16-hex-digit FNV-1a hash of a vector's bytes; equal iff bitwise equal
/// (up to hash collisions).
std::string vector_hash(const Vector& v);

}  // namespace pinhole

#endif  // PINHOLE_MAPPING_HPP_
