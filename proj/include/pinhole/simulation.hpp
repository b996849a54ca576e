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

#ifndef PINHOLE_SIMULATION_HPP_
#define PINHOLE_SIMULATION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pinhole/asv.hpp"
#include "pinhole/dispersion.hpp"
#include "pinhole/embedding.hpp"
#include "pinhole/mapping.hpp"

namespace pinhole {

/// Synthetic speaker population: speaker means m_s ~ N(0, sigma_between^2 I),
/// utterances normalize(m_s + N(0, sigma_within^2 I)).
struct PopulationConfig {
  std::size_t dim = 16;
  std::size_t n_speakers = 50;
  std::size_t utts_per_speaker = 20;
  double sigma_between = 1.0;
  double sigma_within = 0.3;
  std::uint64_t seed = 1;

  /// `name` prefixes field names in error messages.
  void validate(std::string_view name = "population") const;
};

/// Speakers are labeled <prefix>NNNN, utterances <prefix>NNNN_uNNNN, and
/// partitions alternate "F", "M" by speaker index.
EmbeddingSet generate_population(const PopulationConfig& config,
                                 std::string_view id_prefix = "spk");

struct MappingSpec {
  std::string label;
  MappingConfig config;
};

/// Everything one `simulate` run needs. Each entry of `seeds` yields an
/// independent replicate: population, cohort, mapping and trial seeds are
/// derived from the configured bases and the replicate seed.
struct SimulationConfig {
  PopulationConfig population;
  PopulationConfig cohort;
  std::vector<MappingSpec> mappings;
  std::vector<std::uint64_t> seeds;
  std::uint64_t trials_seed = 7;
  std::optional<std::size_t> max_nontarget_per_test;
  double ridge = kDefaultRidge;

  /// Desk-scale defaults: d=16, 50x20 population, 100x10 cohort, rho 0.2,
  /// four mappings (member and average families, each in a2o and a2a), seeds
  /// 1..5.
  static SimulationConfig defaults();
  void validate() const;
};

nlohmann::json to_json(const SimulationConfig& config);
/// Missing keys take their default values. Throws ConfigError naming the
/// offending field.
SimulationConfig simulation_config_from_json(const nlohmann::json& j);

/// One (condition, replicate) result. `mapping` is empty for the original
/// population.
struct ConditionRow {
  std::uint64_t seed = 0;
  std::string label;
  std::optional<MappingConfig> mapping;
  ScatterReport scatter;
  double within_trace = 0.0;   // raw Tr(S_w)
  double between_trace = 0.0;  // raw Tr(S_b)
  EerResult linkability;
  PartitionedEer linkability_by_partition;
  std::optional<EerResult> deidentification;
  std::optional<PartitionedEer> deidentification_by_partition;

  bool is_original() const { return !mapping.has_value(); }
};

struct ExperimentReport {
  SimulationConfig config;
  std::vector<ConditionRow> rows;  // ordered by (condition, seed)
};

/// Data produced by one replicate, kept for CSV output.
struct ReplicateData {
  std::uint64_t seed = 0;
  EmbeddingSet population{1, {}};
  EmbeddingSet cohort{1, {}};
  std::vector<EmbeddingSet> anonymized;  // parallel to config.mappings
};

/// Runs the three experiments (dispersion, linkability, de-identification)
/// for one replicate with fully resolved seeds.
std::vector<ConditionRow> run_experiment(const PopulationConfig& population,
                                         const PopulationConfig& cohort,
                                         const std::vector<MappingSpec>& mappings,
                                         std::uint64_t trials_seed, std::uint64_t replicate,
                                         double ridge = kDefaultRidge,
                                         std::optional<std::size_t> max_nontarget = kUnbounded,
                                         ReplicateData* data = nullptr);

/// All replicates of `config`. Fills `data` (one entry per seed) if given.
ExperimentReport run_simulation(const SimulationConfig& config,
                                std::vector<ReplicateData>* data = nullptr);

/// Replicate-specific configs derived from the bases in `config`.
PopulationConfig replicate_population(const SimulationConfig& config, std::uint64_t seed);
PopulationConfig replicate_cohort(const SimulationConfig& config, std::uint64_t seed);
MappingConfig replicate_mapping(const MappingConfig& base, std::uint64_t seed);
std::uint64_t replicate_trials_seed(const SimulationConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Trend verdicts

enum class Verdict { kPass, kFail, kInconclusive };
std::string_view to_string(Verdict verdict);

struct TrendCheck {
  std::string name;  // "<assertion>/<family>"
  Verdict verdict = Verdict::kFail;
  double margin = 0.0;
  std::vector<double> seed_margins;  // in report seed order
  std::string detail;
};

/// Linkability margins smaller than this many EER points are inconclusive.
inline constexpr double kInconclusiveLinkabilityPoints = 0.5;
/// Minimum relative J gap for the dispersion assertion.
inline constexpr double kDispersionMinGap = 0.05;
/// De-identification: both EERs within 50 +- 5 points, at most 2 apart.
inline constexpr double kDeidBandPoints = 5.0;
inline constexpr double kDeidMaxGapPoints = 2.0;

/// Evaluates, for every strategy family holding both an a2o and an a2a
/// condition:
///   dispersion         j(org) > j(a2o) > j(a2a), each gap >= 5% relative,
///                      in a majority of seeds; margin = mean of per-seed
///                      min(relative gap).
///   linkability        mean EER(a2a) - EER(a2o) in points; pass when
///                      >= 0.5 and positive in a majority of seeds, fail when
///                      <= -0.5, inconclusive in between.
///   de-identification  mean EERs within [45, 55] and at most 2 points
///                      apart; margin = smallest slack in points.
/// Throws DataError when no family has both modes.
std::vector<TrendCheck> trend_check(const ExperimentReport& report);

nlohmann::json to_json(const ExperimentReport& report);
nlohmann::json to_json(const std::vector<TrendCheck>& checks);
std::string render_markdown(const ExperimentReport& report,
                            const std::vector<TrendCheck>& checks);

}  // namespace pinhole

#endif  // PINHOLE_SIMULATION_HPP_
