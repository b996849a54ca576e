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

#include "pinhole/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "pinhole/error.hpp"
#include "pinhole/io.hpp"
#include "pinhole/rng.hpp"

namespace pinhole {

namespace {

std::string zero_pad(std::size_t value, std::size_t width) {
  std::string digits = std::to_string(value);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return digits;
}

std::size_t id_width(std::size_t count) {
  return std::max<std::size_t>(4, std::to_string(count).size());
}

template <typename T>
T read_field(const nlohmann::json& j, const std::string& key, const std::string& path,
             T fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 &&
                                   !v.is_number_unsigned())) {
      throw ConfigError("field `" + path + "` must be a nonnegative integer");
    }
  }
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("field `" + path + "` has the wrong type");
  }
}

PopulationConfig population_from_json(const nlohmann::json& j, const std::string& name,
                                      PopulationConfig c) {
  if (!j.is_object()) throw ConfigError("field `" + name + "` must be an object");
  c.dim = read_field<std::size_t>(j, "dim", name + ".dim", c.dim);
  c.n_speakers = read_field<std::size_t>(j, "n_speakers", name + ".n_speakers", c.n_speakers);
  c.utts_per_speaker =
      read_field<std::size_t>(j, "utts_per_speaker", name + ".utts_per_speaker", c.utts_per_speaker);
  c.sigma_between = read_field<double>(j, "sigma_between", name + ".sigma_between", c.sigma_between);
  c.sigma_within = read_field<double>(j, "sigma_within", name + ".sigma_within", c.sigma_within);
  c.seed = read_field<std::uint64_t>(j, "seed", name + ".seed", c.seed);
  return c;
}

nlohmann::json population_to_json(const PopulationConfig& c) {
  return {{"dim", c.dim},
          {"n_speakers", c.n_speakers},
          {"utts_per_speaker", c.utts_per_speaker},
          {"sigma_between", c.sigma_between},
          {"sigma_within", c.sigma_within},
          {"seed", c.seed}};
}

std::string default_label(const MappingConfig& c) {
  return std::string(to_string(c.strategy.kind)) + "-" + std::string(to_string(c.mode));
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

PartitionedEer partition_linkability(const EmbeddingSet& anon, std::uint64_t trials_seed,
                                     std::optional<std::size_t> max_nontarget) {
  std::vector<PartitionEer> parts;
  for (const auto& label : partitions(anon)) {
    parts.push_back({label, linkability_eer(filter_partition(anon, label), trials_seed, max_nontarget)});
  }
  return summarize_partitions(std::move(parts));
}

PartitionedEer partition_deidentification(const EmbeddingSet& original, const EmbeddingSet& anon,
                                          std::uint64_t trials_seed,
                                          std::optional<std::size_t> max_nontarget) {
  std::vector<PartitionEer> parts;
  for (const auto& label : partitions(original)) {
    parts.push_back({label, deidentification_eer(filter_partition(original, label),
                                                 filter_partition(anon, label), trials_seed,
                                                 max_nontarget)});
  }
  return summarize_partitions(std::move(parts));
}

ConditionRow evaluate(const EmbeddingSet& original, const EmbeddingSet* anon,
                      std::uint64_t trials_seed, double ridge,
                      std::optional<std::size_t> max_nontarget) {
  const EmbeddingSet& subject = anon ? *anon : original;
  ConditionRow row;
  const ScatterPair pair = scatter_matrices(subject);
  row.scatter = scatter_report(pair, ridge);
  row.within_trace = pair.within.trace();
  row.between_trace = pair.between.trace();
  row.linkability = linkability_eer(subject, trials_seed, max_nontarget);
  row.linkability_by_partition = partition_linkability(subject, trials_seed, max_nontarget);
  if (anon) {
    row.deidentification = deidentification_eer(original, *anon, trials_seed, max_nontarget);
    row.deidentification_by_partition =
        partition_deidentification(original, *anon, trials_seed, max_nontarget);
  }
  return row;
}

}  // namespace

// ---------------------------------------------------------------------------

void PopulationConfig::validate(std::string_view name) const {
  const std::string n(name);
  if (dim < 2) throw ConfigError("field `" + n + ".dim` must be >= 2");
  if (n_speakers < 2) throw ConfigError("field `" + n + ".n_speakers` must be >= 2");
  if (utts_per_speaker < 2) throw ConfigError("field `" + n + ".utts_per_speaker` must be >= 2");
  if (!(sigma_between > 0.0) || !std::isfinite(sigma_between)) {
    throw ConfigError("field `" + n + ".sigma_between` must be positive");
  }
  if (!(sigma_within > 0.0) || !std::isfinite(sigma_within)) {
    throw ConfigError("field `" + n + ".sigma_within` must be positive");
  }
}

EmbeddingSet generate_population(const PopulationConfig& config, std::string_view id_prefix) {
  config.validate();
  if (!is_valid_id(id_prefix)) throw ConfigError("invalid speaker id prefix");
  const auto d = static_cast<Eigen::Index>(config.dim);
  const std::size_t spk_width = id_width(config.n_speakers);
  const std::size_t utt_width = id_width(config.utts_per_speaker);

  Rng rng(config.seed);
  std::vector<UtteranceRecord> records;
  records.reserve(config.n_speakers * config.utts_per_speaker);
  for (std::size_t s = 0; s < config.n_speakers; ++s) {
    Vector center(d);
    for (Eigen::Index j = 0; j < d; ++j) center[j] = rng.normal(0.0, config.sigma_between);
    const std::string spk = std::string(id_prefix) + zero_pad(s + 1, spk_width);
    const std::string partition = s % 2 == 0 ? "F" : "M";
    for (std::size_t u = 0; u < config.utts_per_speaker; ++u) {
      Vector x = center;
      for (Eigen::Index j = 0; j < d; ++j) x[j] += rng.normal(0.0, config.sigma_within);
      std::string utt = spk + "_u" + zero_pad(u + 1, utt_width);
      records.push_back({utt, spk, partition, unit(x, "generated utterance " + utt)});
    }
  }
  return EmbeddingSet(config.dim, std::move(records));
}

// ---------------------------------------------------------------------------

SimulationConfig SimulationConfig::defaults() {
  SimulationConfig c;
  c.population = {16, 50, 20, 1.0, 0.3, 1};
  c.cohort = {16, 100, 10, 1.0, 0.3, 2};
  auto mapping = [](PseudoStrategy strategy, MappingMode mode) {
    MappingConfig m;
    m.strategy = strategy;
    m.mode = mode;
    m.rho = 0.2;
    m.noise_sigma = 0.08;
    m.residual_seed = 11;
    m.assignment_seed = 21;
    return MappingSpec{default_label(m), m};
  };
  // Cohort analogs of the two systems: a member voice (one-hot speaker id)
  // and an averaged voice (mean x-vector).
  c.mappings = {
      mapping(PseudoStrategy::fixed_member(3), MappingMode::kAnyToOne),
      mapping(PseudoStrategy::random_member(), MappingMode::kAnyToAny),
      mapping(PseudoStrategy::average_all(), MappingMode::kAnyToOne),
      mapping(PseudoStrategy::random_k_average(10), MappingMode::kAnyToAny),
  };
  c.seeds = {1, 2, 3, 4, 5};
  return c;
}

void SimulationConfig::validate() const {
  population.validate("population");
  cohort.validate("cohort");
  if (cohort.dim != population.dim) {
    throw ConfigError("field `cohort.dim` must equal `population.dim`");
  }
  if (cohort.seed == population.seed) {
    throw ConfigError("field `cohort.seed` must differ from `population.seed`");
  }
  if (mappings.empty()) throw ConfigError("field `mappings` must not be empty");
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < mappings.size(); ++i) {
    const auto& m = mappings[i];
    if (!is_valid_id(m.label)) {
      throw ConfigError("field `mappings[" + std::to_string(i) + "].label` is not a valid label");
    }
    if (m.label == "org") throw ConfigError("mapping label \"org\" is reserved");
    if (std::find(labels.begin(), labels.end(), m.label) != labels.end()) {
      throw ConfigError("duplicate mapping label '" + m.label + "'");
    }
    labels.push_back(m.label);
    try {
      m.config.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("mappings[" + std::to_string(i) + "]: " + e.what());
    }
  }
  if (seeds.empty()) throw ConfigError("field `seeds` must not be empty");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw ConfigError("field `ridge` must be a finite nonnegative number");
  }
  if (max_nontarget_per_test && *max_nontarget_per_test == 0) {
    throw ConfigError("field `max_nontarget_per_test` must be positive or null");
  }
}

nlohmann::json to_json(const SimulationConfig& config) {
  auto mappings = nlohmann::json::array();
  for (const auto& m : config.mappings) {
    auto j = to_json(m.config);
    j["label"] = m.label;
    mappings.push_back(std::move(j));
  }
  nlohmann::json j = {{"population", population_to_json(config.population)},
                      {"cohort", population_to_json(config.cohort)},
                      {"mappings", std::move(mappings)},
                      {"seeds", config.seeds},
                      {"trials_seed", config.trials_seed},
                      {"ridge", config.ridge}};
  j["max_nontarget_per_test"] = config.max_nontarget_per_test
                                    ? nlohmann::json(*config.max_nontarget_per_test)
                                    : nlohmann::json(nullptr);
  return j;
}

SimulationConfig simulation_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("simulation config must be a JSON object");
  SimulationConfig c = SimulationConfig::defaults();
  if (j.contains("population")) {
    c.population = population_from_json(j["population"], "population", c.population);
  }
  if (j.contains("cohort")) c.cohort = population_from_json(j["cohort"], "cohort", c.cohort);
  if (j.contains("mappings")) {
    if (!j["mappings"].is_array()) throw ConfigError("field `mappings` must be an array");
    c.mappings.clear();
    for (std::size_t i = 0; i < j["mappings"].size(); ++i) {
      const auto& m = j["mappings"][i];
      MappingSpec spec;
      try {
        spec.config = mapping_config_from_json(m);
      } catch (const ConfigError& e) {
        throw ConfigError("mappings[" + std::to_string(i) + "]: " + e.what());
      }
      spec.label = m.contains("label") ? read_field<std::string>(m, "label", "label", "")
                                       : default_label(spec.config);
      c.mappings.push_back(std::move(spec));
    }
  }
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array()) throw ConfigError("field `seeds` must be an array");
    c.seeds.clear();
    for (const auto& s : j["seeds"]) {
      if (!s.is_number_unsigned()) throw ConfigError("field `seeds` must hold nonnegative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  c.trials_seed = read_field<std::uint64_t>(j, "trials_seed", "trials_seed", c.trials_seed);
  c.ridge = read_field<double>(j, "ridge", "ridge", c.ridge);
  if (j.contains("max_nontarget_per_test") && !j["max_nontarget_per_test"].is_null()) {
    c.max_nontarget_per_test =
        read_field<std::size_t>(j, "max_nontarget_per_test", "max_nontarget_per_test", 0);
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

PopulationConfig replicate_population(const SimulationConfig& config, std::uint64_t seed) {
  PopulationConfig p = config.population;
  p.seed = derive_seed(config.population.seed, streams::kPopulation, seed);
  return p;
}

PopulationConfig replicate_cohort(const SimulationConfig& config, std::uint64_t seed) {
  PopulationConfig p = config.cohort;
  p.seed = derive_seed(config.cohort.seed, streams::kCohort, seed);
  return p;
}

MappingConfig replicate_mapping(const MappingConfig& base, std::uint64_t seed) {
  MappingConfig m = base;
  m.residual_seed = derive_seed(base.residual_seed, streams::kResidualMap, seed);
  m.assignment_seed = derive_seed(base.assignment_seed, streams::kAssignment, seed);
  return m;
}

std::uint64_t replicate_trials_seed(const SimulationConfig& config, std::uint64_t seed) {
  return derive_seed(config.trials_seed, streams::kTrials, seed);
}

std::vector<ConditionRow> run_experiment(const PopulationConfig& population,
                                         const PopulationConfig& cohort,
                                         const std::vector<MappingSpec>& mappings,
                                         std::uint64_t trials_seed, std::uint64_t replicate,
                                         double ridge, std::optional<std::size_t> max_nontarget,
                                         ReplicateData* data) {
  if (population.seed == cohort.seed) {
    throw ConfigError("cohort must be generated from a different seed than the population");
  }
  const EmbeddingSet original = generate_population(population, "spk");
  const EmbeddingSet cohort_set = generate_population(cohort, "coh");

  std::vector<ConditionRow> rows;
  rows.push_back(evaluate(original, nullptr, trials_seed, ridge, max_nontarget));
  rows.back().label = "org";
  rows.back().seed = replicate;

  std::vector<EmbeddingSet> anonymized;
  for (const auto& spec : mappings) {
    EmbeddingSet anon = anonymize(original, cohort_set, spec.config);
    ConditionRow row = evaluate(original, &anon, trials_seed, ridge, max_nontarget);
    row.label = spec.label;
    row.seed = replicate;
    row.mapping = spec.config;
    rows.push_back(std::move(row));
    if (data) anonymized.push_back(std::move(anon));
  }
  if (data) *data = {replicate, original, cohort_set, std::move(anonymized)};
  return rows;
}

ExperimentReport run_simulation(const SimulationConfig& config, std::vector<ReplicateData>* data) {
  config.validate();
  // condition index (0 = org) -> rows in seed order
  std::vector<std::vector<ConditionRow>> by_condition(config.mappings.size() + 1);
  if (data) data->clear();
  for (std::uint64_t seed : config.seeds) {
    std::vector<MappingSpec> resolved = config.mappings;
    for (auto& spec : resolved) spec.config = replicate_mapping(spec.config, seed);
    ReplicateData replicate;
    auto rows = run_experiment(replicate_population(config, seed), replicate_cohort(config, seed),
                               resolved, replicate_trials_seed(config, seed), seed, config.ridge,
                               config.max_nontarget_per_test, data ? &replicate : nullptr);
    for (std::size_t i = 0; i < rows.size(); ++i) by_condition[i].push_back(std::move(rows[i]));
    if (data) data->push_back(std::move(replicate));
  }
  ExperimentReport report{config, {}};
  for (auto& rows : by_condition) {
    for (auto& row : rows) report.rows.push_back(std::move(row));
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kFail:
      return "fail";
    case Verdict::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

std::vector<TrendCheck> trend_check(const ExperimentReport& report) {
  // Seeds in report order, and row lookup by (label, seed).
  std::vector<std::uint64_t> seeds;
  std::map<std::pair<std::string, std::uint64_t>, const ConditionRow*> lookup;
  for (const auto& row : report.rows) {
    if (row.is_original() && std::find(seeds.begin(), seeds.end(), row.seed) == seeds.end()) {
      seeds.push_back(row.seed);
    }
    lookup[{row.label, row.seed}] = &row;
  }
  if (seeds.empty()) throw DataError("trend_check: report has no original rows");

  // family -> (a2o label, a2a label), first of each in row order
  std::vector<std::string> families;
  std::map<std::string, std::pair<std::string, std::string>> pairs;
  for (const auto& row : report.rows) {
    if (row.is_original()) continue;
    const std::string family(strategy_family(row.mapping->strategy.kind));
    if (!pairs.contains(family)) families.push_back(family);
    auto& slot = pairs[family];
    auto& label = row.mapping->mode == MappingMode::kAnyToOne ? slot.first : slot.second;
    if (label.empty()) label = row.label;
  }

  auto row_for = [&](const std::string& label, std::uint64_t seed) -> const ConditionRow& {
    auto it = lookup.find({label, seed});
    if (it == lookup.end()) {
      throw DataError("trend_check: missing row '" + label + "' for seed " + std::to_string(seed));
    }
    return *it->second;
  };

  std::vector<TrendCheck> checks;
  const auto n = static_cast<double>(seeds.size());
  for (const auto& family : families) {
    const auto& [a2o, a2a] = pairs[family];
    if (a2o.empty() || a2a.empty()) continue;

    TrendCheck dispersion;
    TrendCheck linkability;
    TrendCheck deid;
    dispersion.name = "dispersion/" + family;
    linkability.name = "linkability/" + family;
    deid.name = "deidentification/" + family;
    std::size_t dispersion_passes = 0;
    std::size_t linkability_positive = 0;
    std::vector<double> deid_a2o;
    std::vector<double> deid_a2a;
    for (std::uint64_t seed : seeds) {
      const ConditionRow& org = row_for("org", seed);
      const ConditionRow& one = row_for(a2o, seed);
      const ConditionRow& any = row_for(a2a, seed);

      const double j_org = org.scatter.j_trace_ratio;
      const double j_one = one.scatter.j_trace_ratio;
      const double j_any = any.scatter.j_trace_ratio;
      const double gap = std::min((j_org - j_one) / j_org, (j_one - j_any) / j_one);
      dispersion.seed_margins.push_back(gap);
      if (gap >= kDispersionMinGap) ++dispersion_passes;

      const double link = 100.0 * (any.linkability.eer - one.linkability.eer);
      linkability.seed_margins.push_back(link);
      if (link > 0.0) ++linkability_positive;

      if (!one.deidentification || !any.deidentification) {
        throw DataError("trend_check: anonymized row without de-identification result");
      }
      const double d_one = 100.0 * one.deidentification->eer;
      const double d_any = 100.0 * any.deidentification->eer;
      deid_a2o.push_back(d_one);
      deid_a2a.push_back(d_any);
      deid.seed_margins.push_back(std::min({kDeidMaxGapPoints - std::abs(d_one - d_any),
                                            kDeidBandPoints - std::abs(d_one - 50.0),
                                            kDeidBandPoints - std::abs(d_any - 50.0)}));
    }

    dispersion.margin = mean(dispersion.seed_margins);
    dispersion.verdict = 2.0 * static_cast<double>(dispersion_passes) > n ? Verdict::kPass
                                                                          : Verdict::kFail;
    dispersion.detail = std::to_string(dispersion_passes) + "/" + std::to_string(seeds.size()) +
                        " seeds with j(org) > j(" + a2o + ") > j(" + a2a + ") by >= 5%";

    linkability.margin = mean(linkability.seed_margins);
    if (std::abs(linkability.margin) < kInconclusiveLinkabilityPoints) {
      linkability.verdict = Verdict::kInconclusive;
    } else if (linkability.margin > 0.0 && 2.0 * static_cast<double>(linkability_positive) > n) {
      linkability.verdict = Verdict::kPass;
    } else {
      linkability.verdict = Verdict::kFail;
    }
    linkability.detail = "mean EER(" + a2a + ") - EER(" + a2o + ") in points; " +
                         std::to_string(linkability_positive) + "/" +
                         std::to_string(seeds.size()) + " seeds positive";

    const double m_one = mean(deid_a2o);
    const double m_any = mean(deid_a2a);
    deid.margin = std::min({kDeidMaxGapPoints - std::abs(m_one - m_any),
                            kDeidBandPoints - std::abs(m_one - 50.0),
                            kDeidBandPoints - std::abs(m_any - 50.0)});
    deid.verdict = deid.margin >= 0.0 ? Verdict::kPass : Verdict::kFail;
    std::ostringstream detail;
    detail << "mean EER " << a2o << " = " << m_one << "%, " << a2a << " = " << m_any << "%";
    deid.detail = detail.str();

    checks.push_back(std::move(dispersion));
    checks.push_back(std::move(linkability));
    checks.push_back(std::move(deid));
  }
  if (checks.empty()) {
    throw DataError("trend_check: missing counterpart row (no strategy family has both an a2o "
                    "and an a2a condition)");
  }
  return checks;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const std::vector<TrendCheck>& checks) {
  auto out = nlohmann::json::array();
  for (const auto& c : checks) {
    out.push_back({{"name", c.name},
                   {"verdict", to_string(c.verdict)},
                   {"margin", c.margin},
                   {"seed_margins", c.seed_margins},
                   {"detail", c.detail}});
  }
  return out;
}

nlohmann::json to_json(const ExperimentReport& report) {
  auto rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json r = {{"seed", row.seed},
                        {"condition", row.label},
                        {"scatter", to_json(row.scatter)},
                        {"within_trace", row.within_trace},
                        {"between_trace", row.between_trace},
                        {"linkability", to_json(row.linkability, false)},
                        {"linkability_by_partition", to_json(row.linkability_by_partition)}};
    if (row.mapping) r["mapping"] = to_json(*row.mapping);
    if (row.deidentification) r["deidentification"] = to_json(*row.deidentification, false);
    if (row.deidentification_by_partition) {
      r["deidentification_by_partition"] = to_json(*row.deidentification_by_partition);
    }
    rows.push_back(std::move(r));
  }
  return {{"config", to_json(report.config)}, {"seeds", report.config.seeds}, {"rows", rows}};
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

struct ConditionSummary {
  std::string label;
  std::string mode;
  std::vector<const ConditionRow*> rows;
};

std::vector<ConditionSummary> group_rows(const ExperimentReport& report) {
  std::vector<ConditionSummary> groups;
  for (const auto& row : report.rows) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const ConditionSummary& g) { return g.label == row.label; });
    if (it == groups.end()) {
      groups.push_back({row.label, row.mapping ? std::string(to_string(row.mapping->mode)) : "-", {}});
      it = std::prev(groups.end());
    }
    it->rows.push_back(&row);
  }
  return groups;
}

template <typename F>
double average(const ConditionSummary& g, F&& metric) {
  double sum = 0.0;
  for (const auto* r : g.rows) sum += metric(*r);
  return sum / static_cast<double>(g.rows.size());
}

void partition_table(std::ostringstream& md, const std::vector<ConditionSummary>& groups,
                     bool deid) {
  // Partition labels from the first row that has them.
  std::vector<std::string> labels;
  for (const auto& g : groups) {
    const ConditionRow& r = *g.rows.front();
    const PartitionedEer* p = deid ? (r.deidentification_by_partition
                                          ? &*r.deidentification_by_partition
                                          : nullptr)
                                   : &r.linkability_by_partition;
    if (p) {
      for (const auto& part : p->partitions) labels.push_back(part.partition);
      break;
    }
  }
  md << "| Condition | Mapping |";
  for (const auto& l : labels) md << ' ' << l << " |";
  md << " Avg (unweighted) | Avg (weighted) | Pooled |\n|---|---|";
  for (std::size_t i = 0; i < labels.size(); ++i) md << "---|";
  md << "---|---|---|\n";
  for (const auto& g : groups) {
    if (deid && !g.rows.front()->deidentification) continue;
    auto by_part = [&](const ConditionRow& r) -> const PartitionedEer& {
      return deid ? *r.deidentification_by_partition : r.linkability_by_partition;
    };
    md << "| " << g.label << " | " << g.mode << " |";
    for (std::size_t i = 0; i < labels.size(); ++i) {
      md << ' '
         << fixed(100.0 * average(g, [&](const ConditionRow& r) {
                    const auto& parts = by_part(r).partitions;
                    return i < parts.size() ? parts[i].result.eer : 0.0;
                  }),
                  2)
         << " |";
    }
    md << ' ' << fixed(100.0 * average(g, [&](const ConditionRow& r) { return by_part(r).unweighted_mean; }), 2)
       << " | " << fixed(100.0 * average(g, [&](const ConditionRow& r) { return by_part(r).weighted_mean; }), 2)
       << " | "
       << fixed(100.0 * average(g, [&](const ConditionRow& r) {
                  return deid ? r.deidentification->eer : r.linkability.eer;
                }),
                2)
       << " |\n";
  }
}

}  // namespace

std::string render_markdown(const ExperimentReport& report,
                            const std::vector<TrendCheck>& checks) {
  const auto groups = group_rows(report);
  std::ostringstream md;
  md << "# Pinhole simulation report\n\n";
  md << "Seeds:";
  for (auto s : report.config.seeds) md << ' ' << s;
  md << ". Values are means over seeds.\n\n";

  md << "## Dispersion\n\n";
  md << "| Condition | Mapping | Tr(W'SwW) | Tr(W'SbW) | J (trace ratio) | J (LDA) | Tr(Sw) raw | "
        "Tr(Sb) raw |\n|---|---|---|---|---|---|---|---|\n";
  for (const auto& g : groups) {
    md << "| " << g.label << " | " << g.mode << " | "
       << fixed(average(g, [](const ConditionRow& r) { return r.scatter.tr_w; }), 2) << " | "
       << fixed(average(g, [](const ConditionRow& r) { return r.scatter.tr_b; }), 2) << " | "
       << fixed(average(g, [](const ConditionRow& r) { return r.scatter.j_trace_ratio; }), 3)
       << " | " << fixed(average(g, [](const ConditionRow& r) { return r.scatter.j_lda; }), 3)
       << " | " << fixed(average(g, [](const ConditionRow& r) { return r.within_trace; }), 2)
       << " | " << fixed(average(g, [](const ConditionRow& r) { return r.between_trace; }), 2)
       << " |\n";
  }

  md << "\n## Linkability EER (%), anonymized enrollment and test\n\n";
  partition_table(md, groups, false);
  md << "\n## De-identification EER (%), original enrollment, anonymized test\n\n";
  partition_table(md, groups, true);

  md << "\n## Trend checks\n\n| Assertion | Verdict | Margin | Per-seed margins | Detail |\n"
        "|---|---|---|---|---|\n";
  for (const auto& c : checks) {
    md << "| " << c.name << " | " << to_string(c.verdict) << " | " << fixed(c.margin, 4) << " |";
    for (std::size_t i = 0; i < c.seed_margins.size(); ++i) {
      md << (i ? ", " : " ") << fixed(c.seed_margins[i], 3);
    }
    md << " | " << c.detail << " |\n";
  }
  return md.str();
}

}  // namespace pinhole
