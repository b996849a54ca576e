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

#ifndef PINHOLE_ASV_HPP_
#define PINHOLE_ASV_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pinhole/embedding.hpp"

namespace pinhole {

enum class TrialLabel { kTarget, kNontarget };

/// One verification pair: an enrolled speaker model against a test utterance.
struct Trial {
  std::string enroll_spk;
  std::string test_utt;
  TrialLabel label = TrialLabel::kNontarget;

  bool is_target() const { return label == TrialLabel::kTarget; }
  friend bool operator==(const Trial&, const Trial&) = default;
};

struct ScoredTrial {
  Trial trial;
  double score = 0.0;
};

/// Scores in trial order, with the label tally cached.
struct ScoreSet {
  std::vector<ScoredTrial> scores;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;

  /// Builds a set from parallel target/nontarget score lists (used by tests
  /// and by the `eer` subcommand).
  static ScoreSet from_scores(const std::vector<double>& target,
                              const std::vector<double>& nontarget);
  std::vector<double> target_scores() const;
  std::vector<double> nontarget_scores() const;
};

struct DetPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  std::vector<DetPoint> det_points;  // ascending threshold
};

// ---------------------------------------------------------------------------
// Trials and scoring

/// No limit on nontarget trials per test utterance.
inline constexpr std::optional<std::size_t> kUnbounded = std::nullopt;

/// For every test utterance whose speaker is enrolled: one target trial,
/// then nontarget trials against other enrolled speakers (all of them, or a
/// seeded subset of size max_nontarget_per_test), in spk_id order. When a
/// test utterance also appears in `enroll`, it is left out of its own
/// enrollment model at scoring time; a target trial whose speaker has no
/// other enrollment utterance is skipped. Throws DataError when no target
/// trial can be formed.
std::vector<Trial> generate_trials(const EmbeddingSet& enroll, const EmbeddingSet& test,
                                   std::optional<std::size_t> max_nontarget_per_test,
                                   std::uint64_t seed);

/// Unit-norm mean of the speaker's length-normalized utterances.
Vector enrollment_model(const EmbeddingSet& enroll, const std::string& spk_id);

/// Cosine similarity between each trial's enrollment model and its test
/// vector. Throws DataError naming the first unresolvable trial.
ScoreSet score_trials(const EmbeddingSet& enroll, const EmbeddingSet& test,
                      const std::vector<Trial>& trials);

// ---------------------------------------------------------------------------
// Equal error rate
//
// Candidate thresholds are the midpoints between adjacent distinct sorted
// scores plus two sentinels (min - 1 and max + 1, which act as -inf/+inf).
// FAR(t) = #{nontarget >= t} / n_nontarget, FRR(t) = #{target < t} / n_target.
// The EER is read off where the piecewise-linear FAR and FRR curves (linear
// between consecutive candidates) cross.

EerResult eer(const ScoreSet& scores);

/// Linkability: enrollment and test both anonymized. Each speaker's
/// utterances are split by the parity of their position in sorted utt_id
/// order (even -> enrollment, odd -> test). Every speaker needs >= 2
/// utterances.
EerResult linkability_eer(const EmbeddingSet& anon, std::uint64_t trials_seed,
                          std::optional<std::size_t> max_nontarget_per_test = kUnbounded);

/// De-identification: enrollment from the original set, test from the
/// anonymized set. Same parity split as linkability_eer, so enrollment and
/// test never share an utterance. Both sets must hold the same utt_ids
/// with the same speaker labels.
EerResult deidentification_eer(const EmbeddingSet& original, const EmbeddingSet& anon,
                               std::uint64_t trials_seed,
                               std::optional<std::size_t> max_nontarget_per_test = kUnbounded);

/// The even/odd split used by the two functions above.
struct EnrollTestSplit {
  EmbeddingSet enroll;
  EmbeddingSet test;
};
EnrollTestSplit parity_split(const EmbeddingSet& enroll_side, const EmbeddingSet& test_side);

// ---------------------------------------------------------------------------
// Partition-wise evaluation

struct PartitionEer {
  std::string partition;
  EerResult result;
};

/// Per-partition EERs plus their unweighted mean and trial-count-weighted
/// mean.
struct PartitionedEer {
  std::vector<PartitionEer> partitions;
  double unweighted_mean = 0.0;
  double weighted_mean = 0.0;
};

PartitionedEer summarize_partitions(std::vector<PartitionEer> partitions);

// ---------------------------------------------------------------------------
// File formats
//
//   trials:  enroll_spk<SP>test_utt<SP>target|nontarget
//   scores:  enroll_spk<SP>test_utt<SP>score   (17 significant digits)

void write_trials(const std::vector<Trial>& trials, std::ostream& out);
std::vector<Trial> read_trials(std::istream& in);
void write_scores(const ScoreSet& scores, std::ostream& out);

struct ScoreLine {
  std::string enroll_spk;
  std::string test_utt;
  double score = 0.0;
};
std::vector<ScoreLine> read_scores(std::istream& in);

/// Joins a score file with a trial list on (enroll_spk, test_utt).
ScoreSet attach_labels(const std::vector<Trial>& trials, const std::vector<ScoreLine>& scores);

/// {eer, threshold, n_target, n_nontarget, det_points:[[thr,far,frr],...]}
nlohmann::json to_json(const EerResult& result, bool with_det_points = true);
nlohmann::json to_json(const PartitionedEer& result);

}  // namespace pinhole

#endif  // PINHOLE_ASV_HPP_
