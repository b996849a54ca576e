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

#include "pinhole/mapping.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <Eigen/QR>

#include "pinhole/error.hpp"
#include "pinhole/rng.hpp"

namespace pinhole {

namespace {

using Kind = PseudoStrategy::Kind;

struct KindName {
  Kind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {Kind::kFixedMember, "fixed-member"},
    {Kind::kRandomMember, "random-member"},
    {Kind::kAverageAll, "average-all"},
    {Kind::kRandomKAverage, "random-k-average"},
    {Kind::kFarthestKAverage, "farthest-k-average"},
};

bool uses_k(Kind kind) { return kind == Kind::kRandomKAverage || kind == Kind::kFarthestKAverage; }

std::vector<Vector> cohort_means(const EmbeddingSet& cohort) {
  if (cohort.empty()) throw DataError("cohort is empty");
  std::vector<Vector> means;
  for (auto& s : speaker_summaries(cohort)) means.push_back(std::move(s.mean));
  return means;
}

// Mean over `indices`, summed in ascending index order so that a draw of
// every member reproduces the average-all sum bit for bit.
Vector average_of(const std::vector<Vector>& means, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  Vector sum = Vector::Zero(means.front().size());
  for (std::size_t i : indices) sum += means[i];
  return unit(sum / static_cast<double>(indices.size()), "pseudo-speaker average");
}

std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

// Indices of the `count` means farthest from `source` by cosine distance,
// ties broken by spk_id order.
std::vector<std::size_t> farthest(const std::vector<Vector>& means, const Vector& source,
                                  std::size_t count) {
  const Vector src = unit(source, "farthest-k source mean");
  std::vector<double> distance(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    distance[i] = 1.0 - unit(means[i], "cohort speaker mean").dot(src);
  }
  std::vector<std::size_t> order(means.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return distance[a] > distance[b]; });
  order.resize(count);
  return order;
}

void check_k(const PseudoStrategy& strategy, std::size_t cohort_speakers) {
  if (uses_k(strategy.kind) && strategy.k > cohort_speakers) {
    throw ConfigError("strategy.k = " + std::to_string(strategy.k) + " exceeds the " +
                      std::to_string(cohort_speakers) + " cohort speakers");
  }
  if (strategy.kind == Kind::kFixedMember && strategy.member_index >= cohort_speakers) {
    throw ConfigError("strategy.member_index = " + std::to_string(strategy.member_index) +
                      " is out of range for " + std::to_string(cohort_speakers) +
                      " cohort speakers");
  }
}

Vector select_from_means(const PseudoStrategy& strategy, const std::vector<Vector>& means,
                         const std::optional<Vector>& source_mean, std::uint64_t draw_seed) {
  check_k(strategy, means.size());
  switch (strategy.kind) {
    case Kind::kFixedMember:
      return unit(means[strategy.member_index], "cohort member mean");
    case Kind::kRandomMember: {
      Rng rng(draw_seed);
      return unit(means[static_cast<std::size_t>(rng.index(means.size()))], "cohort member mean");
    }
    case Kind::kAverageAll: {
      std::vector<std::size_t> all(means.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      return average_of(means, std::move(all));
    }
    case Kind::kRandomKAverage: {
      Rng rng(draw_seed);
      return average_of(means, draw_without_replacement(means.size(), strategy.k, rng));
    }
    case Kind::kFarthestKAverage:
      if (!source_mean) throw ConfigError("farthest-k-average requires a source mean");
      return average_of(means, farthest(means, *source_mean, strategy.k));
  }
  throw ConfigError("unknown strategy kind");
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const char* path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("field `") + path + "` has the wrong type");
  }
}

}  // namespace

bool PseudoStrategy::is_random() const {
  return kind == Kind::kRandomMember || kind == Kind::kRandomKAverage;
}

std::string_view to_string(PseudoStrategy::Kind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

PseudoStrategy::Kind parse_strategy_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown strategy kind '" + std::string(name) + "'");
}

std::string_view strategy_family(PseudoStrategy::Kind kind) {
  switch (kind) {
    case Kind::kFixedMember:
    case Kind::kRandomMember:
      return "member";
    case Kind::kAverageAll:
    case Kind::kRandomKAverage:
      return "average";
    case Kind::kFarthestKAverage:
      return "farthest";
  }
  return "unknown";
}

std::string_view to_string(MappingMode mode) {
  return mode == MappingMode::kAnyToOne ? "a2o" : "a2a";
}

MappingMode parse_mapping_mode(std::string_view name) {
  if (name == "a2o") return MappingMode::kAnyToOne;
  if (name == "a2a") return MappingMode::kAnyToAny;
  throw ConfigError("field `mode` must be \"a2o\" or \"a2a\", got '" + std::string(name) + "'");
}

void MappingConfig::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ConfigError("field `rho` must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ConfigError("field `noise_sigma` must be a finite nonnegative number");
  }
  if (uses_k(strategy.kind) && strategy.k == 0) {
    throw ConfigError("field `strategy.k` must be >= 1");
  }
  if (mode == MappingMode::kAnyToAny && !strategy.is_random() &&
      strategy.kind != Kind::kFarthestKAverage) {
    throw ConfigError("field `strategy.kind`: " + std::string(to_string(strategy.kind)) +
                      " yields one voice for every utterance; a2a needs random-member, "
                      "random-k-average or farthest-k-average");
  }
}

nlohmann::json to_json(const MappingConfig& config) {
  nlohmann::json j = {
      {"strategy",
       {{"kind", to_string(config.strategy.kind)},
        {"k", config.strategy.k},
        {"member_index", config.strategy.member_index}}},
      {"mode", to_string(config.mode)},
      {"rho", config.rho},
      {"noise_sigma", config.noise_sigma},
      {"residual_seed", config.residual_seed},
      {"assignment_seed", config.assignment_seed},
  };
  if (config.identity_residual) j["identity_residual"] = true;
  return j;
}

MappingConfig mapping_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("mapping config must be a JSON object");
  if (!j.contains("strategy") || !j["strategy"].is_object()) {
    throw ConfigError("field `strategy` is required and must be an object");
  }
  const auto& s = j["strategy"];
  if (!s.contains("kind")) throw ConfigError("field `strategy.kind` is required");
  if (!j.contains("mode")) throw ConfigError("field `mode` is required");

  MappingConfig c;
  c.strategy.kind = parse_strategy_kind(field<std::string>(s, "kind", "strategy.kind", ""));
  const auto k = field<std::int64_t>(s, "k", "strategy.k", 10);
  const auto member = field<std::int64_t>(s, "member_index", "strategy.member_index", 0);
  if (k < 0) throw ConfigError("field `strategy.k` must be >= 1");
  if (member < 0) throw ConfigError("field `strategy.member_index` must be >= 0");
  c.strategy.k = static_cast<std::size_t>(k);
  c.strategy.member_index = static_cast<std::size_t>(member);
  c.mode = parse_mapping_mode(field<std::string>(j, "mode", "mode", ""));
  c.rho = field<double>(j, "rho", "rho", c.rho);
  c.noise_sigma = field<double>(j, "noise_sigma", "noise_sigma", c.noise_sigma);
  c.residual_seed = field<std::uint64_t>(j, "residual_seed", "residual_seed", 0);
  c.assignment_seed = field<std::uint64_t>(j, "assignment_seed", "assignment_seed", 0);
  c.identity_residual = field<bool>(j, "identity_residual", "identity_residual", false);
  c.validate();
  return c;
}

ResidualMap residual_map(std::size_t dim, std::uint64_t residual_seed) {
  if (dim == 0) throw ConfigError("residual map dimension must be >= 1");
  const auto d = static_cast<Eigen::Index>(dim);
  Rng rng(derive_seed(residual_seed, streams::kResidualMap, dim));
  Matrix gauss(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) gauss(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) {
      if (q(r, c) != 0.0) {
        if (q(r, c) < 0.0) q.col(c) = -q.col(c);
        break;
      }
    }
  }
  return {std::move(q)};
}

Vector select_pseudo(const PseudoStrategy& strategy, const EmbeddingSet& cohort,
                     const std::optional<Vector>& source_mean, std::uint64_t draw_seed) {
  if (source_mean && static_cast<std::size_t>(source_mean->size()) != cohort.dim()) {
    throw DataError("source mean dimension does not match the cohort");
  }
  return select_from_means(strategy, cohort_means(cohort), source_mean, draw_seed);
}

AnonymizationResult anonymize_detailed(const EmbeddingSet& set, const EmbeddingSet& cohort,
                                       const MappingConfig& config) {
  config.validate();
  if (set.dim() != cohort.dim()) {
    throw DataError("dimension mismatch: embeddings have " + std::to_string(set.dim()) +
                    ", cohort has " + std::to_string(cohort.dim()));
  }
  const std::vector<Vector> means = cohort_means(cohort);
  check_k(config.strategy, means.size());
  const bool a2a = config.mode == MappingMode::kAnyToAny;
  const bool farthest_kind = config.strategy.kind == Kind::kFarthestKAverage;
  // a2a farthest-k: draw k of the 2k farthest per utterance.
  const std::size_t pool_size = std::min(2 * config.strategy.k, means.size());
  if (a2a && farthest_kind && pool_size <= config.strategy.k) {
    throw ConfigError("field `strategy.k`: a2a farthest-k-average needs more than k cohort "
                      "speakers to draw from");
  }

  const EmbeddingSet source = length_normalize(set);
  const auto d = static_cast<Eigen::Index>(set.dim());

  // Ordinals in sorted utt_id order make per-utterance draws independent of
  // record order.
  std::vector<std::size_t> by_id(source.size());
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return source[a].utt_id < source[b].utt_id; });
  std::vector<std::uint64_t> ordinal(source.size());
  for (std::size_t o = 0; o < by_id.size(); ++o) ordinal[by_id[o]] = o;

  Matrix rotation = config.identity_residual ? Matrix::Identity(d, d)
                                             : residual_map(set.dim(), config.residual_seed).matrix;

  std::optional<Vector> shared;
  std::unordered_map<std::string, std::vector<std::size_t>> pools;
  if (!a2a) {
    std::optional<Vector> src;
    if (farthest_kind) {
      Vector global = Vector::Zero(d);
      for (const auto& r : source) global += r.vector;
      src = global / static_cast<double>(source.size());
    }
    shared = select_from_means(config.strategy, means, src,
                               derive_seed(config.assignment_seed, streams::kAssignment));
  } else if (farthest_kind) {
    for (const auto& s : speaker_summaries(source)) {
      pools.emplace(s.spk_id, farthest(means, s.mean, pool_size));
    }
  }

  AnonymizationResult out{EmbeddingSet(set.dim(), {}), {}};
  std::vector<UtteranceRecord> records;
  records.reserve(source.size());
  out.pseudo.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const UtteranceRecord& rec = source[i];
    Vector pseudo;
    if (shared) {
      pseudo = *shared;
    } else {
      const std::uint64_t draw = derive_seed(config.assignment_seed, streams::kAssignment,
                                             ordinal[i] + 1);
      if (farthest_kind) {
        const auto& pool = pools.at(rec.spk_id);
        Rng rng(draw);
        std::vector<std::size_t> picked;
        for (std::size_t j : draw_without_replacement(pool.size(), config.strategy.k, rng)) {
          picked.push_back(pool[j]);
        }
        pseudo = average_of(means, std::move(picked));
      } else {
        pseudo = select_from_means(config.strategy, means, std::nullopt, draw);
      }
    }

    Vector mixed = (1.0 - config.rho) * pseudo + config.rho * (rotation * rec.vector);
    if (config.noise_sigma > 0.0) {
      Rng noise(derive_seed(config.residual_seed, streams::kResidualNoise, ordinal[i]));
      for (Eigen::Index j = 0; j < d; ++j) mixed[j] += config.noise_sigma * noise.normal();
    }
    records.push_back(
        {rec.utt_id, rec.spk_id, rec.partition, unit(mixed, "anonymized '" + rec.utt_id + "'")});
    out.pseudo.push_back(std::move(pseudo));
  }
  out.set = EmbeddingSet(set.dim(), std::move(records));
  return out;
}

EmbeddingSet anonymize(const EmbeddingSet& set, const EmbeddingSet& cohort,
                       const MappingConfig& config) {
  return anonymize_detailed(set, cohort, config).set;
}

std::string vector_hash(const Vector& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(v[i]);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xfU];
  return out;
}

}  // namespace pinhole
