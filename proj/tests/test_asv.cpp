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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pinhole/asv.hpp"
#include "pinhole/error.hpp"
#include "pinhole/rng.hpp"

using namespace pinhole;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::string serialize(const std::vector<Trial>& trials) {
  std::ostringstream ss;
  write_trials(trials, ss);
  return ss.str();
}

// Same utterance ids and speaker labels as `like`, vectors pure noise.
EmbeddingSet noise_like(const EmbeddingSet& like, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<UtteranceRecord> out(like.begin(), like.end());
  for (auto& r : out) {
    for (auto& v : r.vector) v = rng.normal();
  }
  return EmbeddingSet(like.dim(), std::move(out));
}

// Copy of `set` with utterance ids prefixed, so it shares no utterance with
// the original.
EmbeddingSet renamed(const EmbeddingSet& set, const std::string& prefix) {
  std::vector<UtteranceRecord> out(set.begin(), set.end());
  for (auto& r : out) r.utt_id = prefix + r.utt_id;
  return EmbeddingSet(set.dim(), std::move(out));
}

// Random score set with deliberate ties (scores drawn from a coarse grid
// part of the time).
ScoreSet random_scores(Rng& rng, std::size_t total) {
  const std::size_t n_target = 1 + rng.index(total - 1);
  std::vector<double> t, n;
  const bool coarse = rng.uniform() < 0.5;
  auto draw = [&](double shift) {
    double v = rng.normal(shift, 1.0);
    return coarse ? std::round(v * 4.0) / 4.0 : v;
  };
  const double separation = 2.0 * rng.uniform();
  for (std::size_t i = 0; i < n_target; ++i) t.push_back(draw(separation));
  for (std::size_t i = n_target; i < total; ++i) n.push_back(draw(0.0));
  return ScoreSet::from_scores(t, n);
}

}  // namespace

TEST_CASE("generate_trials: exhaustive cross") {
  const EmbeddingSet enroll(2, {{"e1", "A", "F", vec({1, 0})},
                                {"e2", "B", "F", vec({0, 1})}});
  const EmbeddingSet test(2, {{"t1", "A", "F", vec({1, 0.1})},
                              {"t2", "A", "F", vec({1, -0.1})},
                              {"t3", "B", "F", vec({0.1, 1})},
                              {"t4", "B", "F", vec({-0.1, 1})}});
  const auto trials = generate_trials(enroll, test, kUnbounded, 1);
  CHECK(trials.size() == 8);
  CHECK(std::count_if(trials.begin(), trials.end(), [](const Trial& t) { return t.is_target(); }) == 4);
  CHECK(trials[0] == Trial{"A", "t1", TrialLabel::kTarget});
  CHECK(trials[1] == Trial{"B", "t1", TrialLabel::kNontarget});
}

TEST_CASE("generate_trials: determinism and nontarget bound") {
  const auto enroll = oracle::random_set(1, 4, 12, 3);
  const auto test = oracle::random_set(2, 4, 12, 2);
  const auto a = generate_trials(enroll, test, 3, 99);
  const auto b = generate_trials(enroll, test, 3, 99);
  CHECK(serialize(a) == serialize(b));
  CHECK(serialize(a) != serialize(generate_trials(enroll, test, 3, 100)));

  std::map<std::string, std::set<std::string>> nontargets;
  for (const auto& t : a) {
    if (!t.is_target()) CHECK(nontargets[t.test_utt].insert(t.enroll_spk).second);
  }
  for (const auto& r : test) {
    CHECK(nontargets[r.utt_id].size() == 3);
    CHECK_FALSE(nontargets[r.utt_id].contains(r.spk_id));
  }
  CHECK_THROWS_AS(generate_trials(enroll, test, 0, 1), ConfigError);
}

TEST_CASE("generate_trials: labels agree with an all-pairs oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const auto enroll = oracle::random_set(seed, 3, 2 + rng.index(6), 1 + rng.index(3));
    const auto test =
        renamed(oracle::random_set(seed + 1000, 3, 2 + rng.index(8), 1 + rng.index(3)), "t");
    const auto trials = generate_trials(enroll, test, kUnbounded, seed);
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& t : trials) {
      CHECK(t.is_target() == oracle::all_pairs_label(test, t));
      CHECK(seen.insert({t.enroll_spk, t.test_utt}).second);
    }
    // Exhaustive: every (enrolled speaker, test utterance) pair appears.
    CHECK(seen.size() == enroll.speaker_count() * test.size());
  }
}

TEST_CASE("generate_trials: errors and self-pairing") {
  const EmbeddingSet enroll(1, {{"e1", "A", "F", vec({1})}});
  const EmbeddingSet test(1, {{"t1", "B", "F", vec({1})}});
  CHECK_THROWS_AS(generate_trials(enroll, test, kUnbounded, 1), DataError);
  CHECK_THROWS_AS(generate_trials(EmbeddingSet(1, {}), test, kUnbounded, 1), DataError);

  // Same set on both sides: a single-utterance speaker gets no target trial,
  // and scoring leaves the test utterance out of its enrollment model.
  const EmbeddingSet both(2, {{"a1", "A", "F", vec({1, 0})},
                              {"a2", "A", "F", vec({0, 1})},
                              {"b1", "B", "F", vec({-1, 0})}});
  const auto trials = generate_trials(both, both, kUnbounded, 1);
  for (const auto& t : trials) {
    if (t.is_target()) CHECK(t.enroll_spk == "A");
  }
  const auto scores = score_trials(both, both, trials);
  for (const auto& s : scores.scores) {
    // a1 vs model(A without a1) = a2: orthogonal.
    if (s.trial.is_target()) CHECK(s.score == doctest::Approx(0.0));
  }
}

TEST_CASE("enrollment_model") {
  const EmbeddingSet set(2, {{"u1", "A", "F", vec({3, 4})},
                             {"u2", "B", "F", vec({2, 2})},
                             {"u3", "B", "F", vec({2, 2})},
                             {"u4", "C", "F", vec({1, 0})},
                             {"u5", "C", "F", vec({0, 1})},
                             {"u6", "D", "F", vec({1, 0})},
                             {"u7", "D", "F", vec({-1, 0})}});
  CHECK(enrollment_model(set, "A").isApprox(vec({0.6, 0.8}), 1e-15));
  CHECK(enrollment_model(set, "B").isApprox(vec({std::sqrt(0.5), std::sqrt(0.5)}), 1e-15));
  CHECK(enrollment_model(set, "C").isApprox(vec({std::sqrt(2.0) / 2, std::sqrt(2.0) / 2}), 1e-15));
  CHECK_THROWS_AS(enrollment_model(set, "Z"), DataError);
  CHECK_THROWS_AS(enrollment_model(set, "D"), NumericalError);
}

TEST_CASE("score_trials") {
  const EmbeddingSet enroll(2, {{"e1", "A", "F", vec({2, 0})}});
  const EmbeddingSet test(2, {{"t1", "A", "F", vec({5, 0})}, {"t2", "B", "F", vec({0, 3})}});
  const std::vector<Trial> trials = {{"A", "t1", TrialLabel::kTarget},
                                     {"A", "t2", TrialLabel::kNontarget}};
  const auto s = score_trials(enroll, test, trials);
  CHECK(s.scores[0].score == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.scores[1].score == 0.0);
  CHECK(s.n_target == 1);
  CHECK(s.n_nontarget == 1);

  CHECK_THROWS_WITH_AS(score_trials(enroll, test, {{"A", "t9", TrialLabel::kTarget}}),
                       doctest::Contains("'t9'"), DataError);
  CHECK_THROWS_WITH_AS(score_trials(enroll, test, {{"Q", "t1", TrialLabel::kTarget}}),
                       doctest::Contains("'Q'"), DataError);

  // Naive dot-product recomputation; shared utterance ids are left out of
  // their own enrollment model.
  const auto e = oracle::random_set(5, 7, 6, 4);
  const auto t = oracle::random_set(6, 7, 6, 3);
  const auto trials2 = generate_trials(e, t, kUnbounded, 5);
  const auto scores = score_trials(e, t, trials2);
  for (const auto& st : scores.scores) {
    Vector mean = Vector::Zero(7);
    int n = 0;
    for (const auto& r : e) {
      if (r.spk_id == st.trial.enroll_spk && r.utt_id != st.trial.test_utt) {
        mean += r.vector / r.vector.norm();
        ++n;
      }
    }
    mean /= n;
    const Vector probe = t[t.find(st.trial.test_utt)].vector;
    double dot = 0.0;
    for (Eigen::Index j = 0; j < 7; ++j) dot += mean[j] * probe[j];
    CHECK(std::abs(st.score - dot / (mean.norm() * probe.norm())) <= 1e-12);
  }
}

TEST_CASE("eer: worked examples") {
  CHECK(eer(ScoreSet::from_scores({1.0, 1.0}, {0.0, 0.0})).eer == 0.0);
  CHECK(eer(ScoreSet::from_scores({0.1, 0.5, 0.9}, {0.9, 0.1, 0.5})).eer == 0.5);
  CHECK(eer(ScoreSet::from_scores({0.3}, {0.3})).eer == 0.5);

  const auto hand = ScoreSet::from_scores({0.9, 0.7, 0.4}, {0.8, 0.3, 0.2});
  const auto r = eer(hand);
  CHECK(r.eer == 1.0 / 3.0);
  CHECK(r.threshold == doctest::Approx(0.55));
  CHECK(oracle::oracle_eer(hand) == 1.0 / 3.0);
  CHECK(oracle::oracle_eer(ScoreSet::from_scores({1.0, 1.0}, {0.0, 0.0})) == 0.0);

  CHECK_THROWS_AS(eer(ScoreSet::from_scores({1.0}, {})), DataError);
  CHECK_THROWS_AS(eer(ScoreSet::from_scores({}, {1.0})), DataError);
}

TEST_CASE("property: eer matches the brute-force oracle") {
  Rng rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto scores = random_scores(rng, 2 + rng.index(499));
    const auto r = eer(scores);
    CHECK(std::abs(r.eer - oracle::oracle_eer(scores)) <= 1e-9);
  }
}

TEST_CASE("property: DET curve shape and operating point") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto scores = random_scores(rng, 2 + rng.index(200));
    const auto r = eer(scores);
    CHECK(r.eer >= 0.0);
    CHECK(r.eer <= 1.0);
    for (std::size_t k = 1; k < r.det_points.size(); ++k) {
      CHECK(r.det_points[k].threshold > r.det_points[k - 1].threshold);
      CHECK(r.det_points[k].far <= r.det_points[k - 1].far);
      CHECK(r.det_points[k].frr >= r.det_points[k - 1].frr);
    }
    // FAR and FRR at the interpolated operating point.
    std::size_t k = 1;
    while (r.det_points[k].threshold < r.threshold) ++k;
    const auto& lo = r.det_points[k == 0 ? 0 : k - 1];
    const auto& hi = r.det_points[k];
    const double alpha = hi.threshold == lo.threshold
                             ? 1.0
                             : (r.threshold - lo.threshold) / (hi.threshold - lo.threshold);
    const double far = lo.far + alpha * (hi.far - lo.far);
    const double frr = lo.frr + alpha * (hi.frr - lo.frr);
    CHECK(std::abs(far - frr) <= 1e-9);
  }
}

TEST_CASE("property: EER is rank based") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const auto scores = random_scores(rng, 2 + rng.index(300));
    const auto base = eer(scores);
    ScoreSet cubed = scores;
    for (auto& s : cubed.scores) s.score = s.score * s.score * s.score + s.score;
    CHECK(eer(cubed).eer == base.eer);
    CHECK(oracle::oracle_eer(cubed) == oracle::oracle_eer(scores));

    ScoreSet shifted = scores;
    const double c = rng.normal(0.0, 3.0);
    for (auto& s : shifted.scores) s.score += c;
    const auto moved = eer(shifted);
    CHECK(moved.eer == base.eer);
    CHECK(std::abs(moved.threshold - (base.threshold + c)) <= 1e-9);
  }
}

TEST_CASE("linkability_eer") {
  SUBCASE("i.i.d. noise is at chance") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto noise = noise_like(oracle::random_set(seed, 16, 20, 10), seed + 50);
      const double e = linkability_eer(noise, seed).eer;
      CHECK(e >= 0.40);
      CHECK(e <= 0.60);
    }
  }
  SUBCASE("separable clusters are linkable") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto clusters = oracle::random_set(seed, 16, 20, 10, 1.0, 0.1);
      CHECK(linkability_eer(clusters, seed).eer < 0.05);
    }
  }
  SUBCASE("deterministic given inputs and seed") {
    const auto set = oracle::random_set(3, 8, 10, 6);
    CHECK(to_json(linkability_eer(set, 4, 3)).dump() == to_json(linkability_eer(set, 4, 3)).dump());
  }
  SUBCASE("speakers need two utterances") {
    const auto set = oracle::random_set(3, 4, 5, 1);
    CHECK_THROWS_AS(linkability_eer(set, 1), DataError);
  }
}

TEST_CASE("parity split") {
  const auto set = oracle::random_set(3, 2, 2, 5);
  const auto split = parity_split(set, set);
  CHECK(split.enroll.size() == 6);
  CHECK(split.test.size() == 4);
  for (const auto& r : split.test) CHECK_FALSE(split.enroll.contains(r.utt_id));
}

TEST_CASE("deidentification_eer") {
  SUBCASE("identity anonymizer") {
    const auto original = oracle::random_set(11, 16, 20, 10, 1.0, 0.1);
    const double deid = deidentification_eer(original, original, 3).eer;
    CHECK(deid < 0.05);
    CHECK(deid == linkability_eer(original, 3).eer);
  }
  SUBCASE("pure-noise anonymizer is at chance") {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto original = oracle::random_set(seed, 16, 30, 10, 1.0, 0.3);
      const double e = deidentification_eer(original, noise_like(original, seed + 7), seed).eer;
      CHECK(e >= 0.45);
      CHECK(e <= 0.55);
      sum += e;
    }
    CHECK(sum / 5 == doctest::Approx(0.5).epsilon(0.05));
  }
  SUBCASE("utterance ids must match") {
    const auto a = oracle::random_set(1, 4, 3, 4);
    const auto b = oracle::random_set(1, 4, 3, 5);
    CHECK_THROWS_AS(deidentification_eer(a, b, 1), DataError);
  }
}

TEST_CASE("trial and score files") {
  const auto e = oracle::random_set(1, 3, 4, 2);
  const auto trials = generate_trials(e, e, 2, 8);
  std::istringstream in(serialize(trials));
  CHECK(read_trials(in) == trials);

  const auto scores = score_trials(e, e, trials);
  std::ostringstream out;
  write_scores(scores, out);
  std::istringstream score_in(out.str());
  const auto lines = read_scores(score_in);
  const auto joined = attach_labels(trials, lines);
  REQUIRE(joined.scores.size() == scores.scores.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    CHECK(joined.scores[i].score == scores.scores[i].score);  // 17 digits
  }
  CHECK(eer(joined).eer == eer(scores).eer);

  std::istringstream bad("A u1 maybe\n");
  CHECK_THROWS_AS(read_trials(bad), DataError);
  std::istringstream bad_score("A u1 x\n");
  CHECK_THROWS_AS(read_scores(bad_score), DataError);
  CHECK_THROWS_AS(attach_labels(trials, {{"nobody", "nothing", 0.0}}), DataError);
}

TEST_CASE("EerResult JSON") {
  const auto j = to_json(eer(ScoreSet::from_scores({0.9, 0.7, 0.4}, {0.8, 0.3, 0.2})));
  CHECK(j["n_target"] == 3);
  CHECK(j["n_nontarget"] == 3);
  CHECK(j["det_points"].size() == 7);
  CHECK(j["det_points"][0].size() == 3);
  CHECK(j.contains("threshold"));
  CHECK(j.contains("eer"));
}

TEST_CASE("partition averages") {
  EerResult a;
  a.eer = 0.1;
  a.n_target = 10;
  a.n_nontarget = 90;
  EerResult b;
  b.eer = 0.3;
  b.n_target = 30;
  b.n_nontarget = 270;
  const auto s = summarize_partitions({{"F", a}, {"M", b}});
  CHECK(s.unweighted_mean == doctest::Approx(0.2));
  CHECK(s.weighted_mean == doctest::Approx(0.25));
  CHECK_THROWS_AS(summarize_partitions({}), DataError);
}
