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

#include "pinhole/asv.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "pinhole/error.hpp"
#include "pinhole/io.hpp"
#include "pinhole/rng.hpp"

namespace pinhole {

ScoreSet ScoreSet::from_scores(const std::vector<double>& target,
                               const std::vector<double>& nontarget) {
  ScoreSet set;
  set.scores.reserve(target.size() + nontarget.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    set.scores.push_back({{"t", "t" + std::to_string(i), TrialLabel::kTarget}, target[i]});
  }
  for (std::size_t i = 0; i < nontarget.size(); ++i) {
    set.scores.push_back({{"n", "n" + std::to_string(i), TrialLabel::kNontarget}, nontarget[i]});
  }
  set.n_target = target.size();
  set.n_nontarget = nontarget.size();
  return set;
}

std::vector<double> ScoreSet::target_scores() const {
  std::vector<double> out;
  for (const auto& s : scores) {
    if (s.trial.is_target()) out.push_back(s.score);
  }
  return out;
}

std::vector<double> ScoreSet::nontarget_scores() const {
  std::vector<double> out;
  for (const auto& s : scores) {
    if (!s.trial.is_target()) out.push_back(s.score);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Trial> generate_trials(const EmbeddingSet& enroll, const EmbeddingSet& test,
                                   std::optional<std::size_t> max_nontarget_per_test,
                                   std::uint64_t seed) {
  if (enroll.empty()) throw DataError("generate_trials: empty enrollment set");
  if (test.empty()) throw DataError("generate_trials: empty test set");
  if (max_nontarget_per_test && *max_nontarget_per_test == 0) {
    throw ConfigError("max_nontarget_per_test must be positive");
  }

  const std::vector<std::string> enrolled = enroll.speakers();
  std::map<std::string, std::size_t, std::less<>> enroll_counts;
  for (const auto& r : enroll) ++enroll_counts[r.spk_id];

  std::vector<Trial> trials;
  std::size_t n_target = 0;
  for (std::size_t t = 0; t < test.size(); ++t) {
    const UtteranceRecord& utt = test[t];
    auto own = enroll_counts.find(utt.spk_id);
    if (own != enroll_counts.end()) {
      // Skip when the only enrollment utterance is the test utterance itself.
      const std::size_t self = enroll.find(utt.utt_id);
      const bool self_enrolled = self != EmbeddingSet::npos && enroll[self].spk_id == utt.spk_id;
      if (!(self_enrolled && own->second == 1)) {
        trials.push_back({utt.spk_id, utt.utt_id, TrialLabel::kTarget});
        ++n_target;
      }
    }

    std::vector<std::size_t> others;
    for (std::size_t s = 0; s < enrolled.size(); ++s) {
      if (enrolled[s] != utt.spk_id) others.push_back(s);
    }
    if (max_nontarget_per_test && others.size() > *max_nontarget_per_test) {
      Rng rng(derive_seed(seed, streams::kTrials, t));
      const std::size_t keep = *max_nontarget_per_test;
      for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(others.size() - i));
        std::swap(others[i], others[j]);
      }
      others.resize(keep);
      std::sort(others.begin(), others.end());
    }
    for (std::size_t s : others) {
      trials.push_back({enrolled[s], utt.utt_id, TrialLabel::kNontarget});
    }
  }
  if (n_target == 0) {
    throw DataError("no target trials possible: no test speaker is enrolled");
  }
  return trials;
}

namespace {

Vector enrollment_model_excluding(const EmbeddingSet& enroll, const std::string& spk_id,
                                  std::string_view excluded_utt) {
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(enroll.dim()));
  std::size_t count = 0;
  for (const auto& r : enroll) {
    if (r.spk_id != spk_id || r.utt_id == excluded_utt) continue;
    sum += unit(r.vector, "utterance '" + r.utt_id + "'");
    ++count;
  }
  if (count == 0) throw DataError("speaker '" + spk_id + "' has no enrollment utterances");
  return unit(sum / static_cast<double>(count),
              "enrollment mean of speaker '" + spk_id + "' (antipodal utterances?)");
}

}  // namespace

Vector enrollment_model(const EmbeddingSet& enroll, const std::string& spk_id) {
  return enrollment_model_excluding(enroll, spk_id, {});
}

ScoreSet score_trials(const EmbeddingSet& enroll, const EmbeddingSet& test,
                      const std::vector<Trial>& trials) {
  if (enroll.dim() != test.dim()) {
    throw DataError("enrollment and test dimensions differ (" + std::to_string(enroll.dim()) +
                    " vs " + std::to_string(test.dim()) + ")");
  }
  std::unordered_map<std::string, Vector> models;
  std::unordered_map<std::string, Vector> probes;
  const std::vector<std::string> enrolled = enroll.speakers();
  const std::set<std::string, std::less<>> enrolled_set(enrolled.begin(), enrolled.end());

  ScoreSet out;
  out.scores.reserve(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& trial = trials[i];
    const std::size_t t = test.find(trial.test_utt);
    if (t == EmbeddingSet::npos || !enrolled_set.contains(trial.enroll_spk)) {
      throw DataError("unresolvable trial " + std::to_string(i + 1) + ": '" + trial.enroll_spk +
                      "' vs '" + trial.test_utt + "'");
    }
    auto probe = probes.find(trial.test_utt);
    if (probe == probes.end()) {
      probe = probes.emplace(trial.test_utt, unit(test[t].vector, "utterance '" + trial.test_utt + "'"))
                  .first;
    }

    // Leave the test utterance out of its own enrollment model.
    const std::size_t self = enroll.find(trial.test_utt);
    double score = 0.0;
    if (self != EmbeddingSet::npos && enroll[self].spk_id == trial.enroll_spk) {
      score = enrollment_model_excluding(enroll, trial.enroll_spk, trial.test_utt).dot(probe->second);
    } else {
      auto model = models.find(trial.enroll_spk);
      if (model == models.end()) {
        model = models.emplace(trial.enroll_spk, enrollment_model(enroll, trial.enroll_spk)).first;
      }
      score = model->second.dot(probe->second);
    }
    out.scores.push_back({trial, score});
    if (trial.is_target()) {
      ++out.n_target;
    } else {
      ++out.n_nontarget;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

EerResult eer(const ScoreSet& scores) {
  if (scores.n_target == 0 || scores.n_nontarget == 0) {
    throw DataError("EER needs at least one target and one nontarget score");
  }
  struct Labeled {
    double score;
    bool target;
  };
  std::vector<Labeled> sorted;
  sorted.reserve(scores.scores.size());
  for (const auto& s : scores.scores) {
    if (!std::isfinite(s.score)) throw DataError("non-finite score in EER input");
    sorted.push_back({s.score, s.trial.is_target()});
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Labeled& a, const Labeled& b) { return a.score < b.score; });

  const auto nt = static_cast<double>(scores.n_target);
  const auto nn = static_cast<double>(scores.n_nontarget);

  // Walk distinct values; after consuming group k the counts describe the
  // threshold just above that group.
  EerResult result;
  result.n_target = scores.n_target;
  result.n_nontarget = scores.n_nontarget;
  result.det_points.push_back({sorted.front().score - 1.0, 1.0, 0.0});
  std::size_t targets_below = 0;
  std::size_t nontargets_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double value = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == value; ++i) {
      ++(sorted[i].target ? targets_below : nontargets_below);
    }
    double threshold = value + 1.0;
    if (i < sorted.size()) {
      threshold = value + (sorted[i].score - value) / 2.0;
      if (!(threshold > value)) threshold = sorted[i].score;
    }
    result.det_points.push_back({threshold,
                                 static_cast<double>(scores.n_nontarget - nontargets_below) / nn,
                                 static_cast<double>(targets_below) / nt});
  }

  const auto& det = result.det_points;
  std::size_t k = 1;
  while (det[k].frr < det[k].far) ++k;  // terminates: last point has frr 1, far 0
  if (det[k].frr == det[k].far) {
    result.eer = det[k].far;
    result.threshold = det[k].threshold;
  } else {
    const double d0 = det[k - 1].far - det[k - 1].frr;
    const double d1 = det[k].far - det[k].frr;
    const double alpha = d0 / (d0 - d1);
    result.eer = det[k - 1].far + alpha * (det[k].far - det[k - 1].far);
    result.threshold = det[k - 1].threshold + alpha * (det[k].threshold - det[k - 1].threshold);
  }
  return result;
}

// ---------------------------------------------------------------------------

EnrollTestSplit parity_split(const EmbeddingSet& enroll_side, const EmbeddingSet& test_side) {
  if (enroll_side.size() != test_side.size()) {
    throw DataError("enrollment and test sides hold different utterance counts");
  }
  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& r : enroll_side) {
    const std::size_t t = test_side.find(r.utt_id);
    if (t == EmbeddingSet::npos) {
      throw DataError("utt_id '" + r.utt_id + "' missing from the test side");
    }
    if (test_side[t].spk_id != r.spk_id) {
      throw DataError("utt_id '" + r.utt_id + "' has different speakers on the two sides");
    }
    by_speaker[r.spk_id].push_back(r.utt_id);
  }

  std::set<std::string, std::less<>> enroll_ids;
  for (auto& [spk, utts] : by_speaker) {
    if (utts.size() < 2) {
      throw DataError("speaker '" + spk + "' has fewer than 2 utterances; cannot split");
    }
    std::sort(utts.begin(), utts.end());
    for (std::size_t i = 0; i < utts.size(); i += 2) enroll_ids.insert(utts[i]);
  }

  std::vector<UtteranceRecord> enroll;
  std::vector<UtteranceRecord> test;
  for (const auto& r : enroll_side) {
    if (enroll_ids.contains(r.utt_id)) enroll.push_back(r);
  }
  for (const auto& r : test_side) {
    if (!enroll_ids.contains(r.utt_id)) test.push_back(r);
  }
  return {EmbeddingSet(enroll_side.dim(), std::move(enroll)),
          EmbeddingSet(test_side.dim(), std::move(test))};
}

namespace {

EerResult split_eer(const EmbeddingSet& enroll_side, const EmbeddingSet& test_side,
                    std::uint64_t trials_seed, std::optional<std::size_t> max_nontarget) {
  if (enroll_side.speaker_count() < 2) throw DataError("need at least 2 speakers");
  const EnrollTestSplit split = parity_split(enroll_side, test_side);
  const auto trials = generate_trials(split.enroll, split.test, max_nontarget, trials_seed);
  return eer(score_trials(split.enroll, split.test, trials));
}

}  // namespace

EerResult linkability_eer(const EmbeddingSet& anon, std::uint64_t trials_seed,
                          std::optional<std::size_t> max_nontarget_per_test) {
  return split_eer(anon, anon, trials_seed, max_nontarget_per_test);
}

EerResult deidentification_eer(const EmbeddingSet& original, const EmbeddingSet& anon,
                               std::uint64_t trials_seed,
                               std::optional<std::size_t> max_nontarget_per_test) {
  if (original.dim() != anon.dim()) {
    throw DataError("original and anonymized dimensions differ");
  }
  return split_eer(original, anon, trials_seed, max_nontarget_per_test);
}

PartitionedEer summarize_partitions(std::vector<PartitionEer> partitions) {
  if (partitions.empty()) throw DataError("no partitions to summarize");
  PartitionedEer out;
  double weight_sum = 0.0;
  for (const auto& p : partitions) {
    const auto w = static_cast<double>(p.result.n_target + p.result.n_nontarget);
    out.unweighted_mean += p.result.eer;
    out.weighted_mean += w * p.result.eer;
    weight_sum += w;
  }
  out.unweighted_mean /= static_cast<double>(partitions.size());
  out.weighted_mean /= weight_sum;
  out.partitions = std::move(partitions);
  return out;
}

// ---------------------------------------------------------------------------

void write_trials(const std::vector<Trial>& trials, std::ostream& out) {
  for (const auto& t : trials) {
    out << t.enroll_spk << ' ' << t.test_utt << ' ' << (t.is_target() ? "target" : "nontarget")
        << '\n';
  }
}

std::vector<Trial> read_trials(std::istream& in) {
  std::vector<Trial> trials;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    std::istringstream fields(line);
    std::string spk, utt, label, extra;
    if (!(fields >> spk >> utt >> label) || (fields >> extra)) {
      throw DataError("malformed trial line " + std::to_string(row));
    }
    if (label != "target" && label != "nontarget") {
      throw DataError("bad trial label '" + label + "' at line " + std::to_string(row));
    }
    trials.push_back({spk, utt, label == "target" ? TrialLabel::kTarget : TrialLabel::kNontarget});
  }
  return trials;
}

void write_scores(const ScoreSet& scores, std::ostream& out) {
  for (const auto& s : scores.scores) {
    out << s.trial.enroll_spk << ' ' << s.trial.test_utt << ' ' << format_double(s.score) << '\n';
  }
}

std::vector<ScoreLine> read_scores(std::istream& in) {
  std::vector<ScoreLine> lines;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    std::istringstream fields(line);
    std::string spk, utt, value, extra;
    if (!(fields >> spk >> utt >> value) || (fields >> extra)) {
      throw DataError("malformed score line " + std::to_string(row));
    }
    double score = 0.0;
    if (!parse_double(value, score) || !std::isfinite(score)) {
      throw DataError("bad score '" + value + "' at line " + std::to_string(row));
    }
    lines.push_back({spk, utt, score});
  }
  return lines;
}

ScoreSet attach_labels(const std::vector<Trial>& trials, const std::vector<ScoreLine>& scores) {
  std::map<std::pair<std::string, std::string>, const Trial*> index;
  for (const auto& t : trials) {
    if (!index.emplace(std::pair{t.enroll_spk, t.test_utt}, &t).second) {
      throw DataError("duplicate trial '" + t.enroll_spk + "' '" + t.test_utt + "'");
    }
  }
  ScoreSet out;
  for (const auto& s : scores) {
    auto it = index.find({s.enroll_spk, s.test_utt});
    if (it == index.end()) {
      throw DataError("score for unknown trial '" + s.enroll_spk + "' '" + s.test_utt + "'");
    }
    out.scores.push_back({*it->second, s.score});
    ++(it->second->is_target() ? out.n_target : out.n_nontarget);
  }
  return out;
}

nlohmann::json to_json(const EerResult& result, bool with_det_points) {
  nlohmann::json j = {{"eer", result.eer},
                      {"threshold", result.threshold},
                      {"n_target", result.n_target},
                      {"n_nontarget", result.n_nontarget}};
  if (with_det_points) {
    auto points = nlohmann::json::array();
    for (const auto& p : result.det_points) points.push_back({p.threshold, p.far, p.frr});
    j["det_points"] = std::move(points);
  }
  return j;
}

nlohmann::json to_json(const PartitionedEer& result) {
  auto parts = nlohmann::json::array();
  for (const auto& p : result.partitions) {
    auto entry = to_json(p.result, false);
    entry["partition"] = p.partition;
    parts.push_back(std::move(entry));
  }
  return {{"partitions", std::move(parts)},
          {"unweighted_mean", result.unweighted_mean},
          {"weighted_mean", result.weighted_mean}};
}

}  // namespace pinhole
