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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pinhole/embedding.hpp"
#include "pinhole/error.hpp"
#include "pinhole/io.hpp"
#include "pinhole/rng.hpp"

using namespace pinhole;

namespace {

EmbeddingSet parse(const std::string& text) {
  std::istringstream in(text);
  return read_embeddings(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("load a small embedding file") {
  const auto set = parse(
      "utt_id,spk_id,partition,dim_0,dim_1\n"
      "u1,A,F,1.5,-2\n"
      "u2,A,F,0,1e-3\n"
      "u3,B,M,+3,4\n");
  CHECK(set.dim() == 2);
  CHECK(set.size() == 3);
  CHECK(set.speaker_count() == 2);
  CHECK(set[0].utt_id == "u1");
  CHECK(set[2].vector[0] == 3.0);
  CHECK(set[1].vector[1] == doctest::Approx(1e-3));
}

TEST_CASE("loader errors are distinct and name the row") {
  const std::string header = "utt_id,spk_id,partition,dim_0,dim_1\n";
  CHECK(error_of("") == "empty file");
  CHECK(error_of("utt,spk_id,partition,dim_0\n").find("malformed header at row 1") == 0);
  CHECK(error_of("utt_id,spk_id,partition,dim_1\n").find("malformed header") == 0);
  CHECK(error_of("utt_id,spk_id,partition\n").find("malformed header") == 0);
  CHECK(error_of(header) == "no records after header");
  CHECK(error_of(header + "u1,A,F,1\n").find("inconsistent row width at row 2") == 0);
  CHECK(error_of(header + "u1,A,F,1,2\nu2,A,F,1\n").find("inconsistent row width at row 3") == 0);
  CHECK(error_of(header + "u1,A,F,1,abc\n").find("non-numeric coordinate 'abc' at row 2") == 0);
  CHECK(error_of(header + "u1,A,F,1,nan\n").find("non-finite coordinate at row 2") == 0);
  CHECK(error_of(header + "u1,A,F,1,2\nu1,B,F,1,2\n").find("duplicate utt_id 'u1' at row 3") == 0);
  CHECK(error_of(header + "u 1,A,F,1,2\n").find("invalid utt_id") == 0);
  CHECK(error_of(header + "u1,A,F,1,2\r\n").find("non-numeric coordinate") == 0);
}

TEST_CASE("set construction enforces invariants") {
  CHECK_THROWS_AS(EmbeddingSet(0, {}), DataError);
  CHECK_THROWS_AS(EmbeddingSet(2, {{"u", "s", "p", vec({1.0})}}), DataError);
  CHECK_THROWS_AS(EmbeddingSet(1, {{"u", "s", "p", vec({INFINITY})}}), DataError);
  CHECK_THROWS_AS(EmbeddingSet(1, {{"u", "s", "p", vec({1})}, {"u", "t", "p", vec({2})}}),
                  DataError);
  CHECK_THROWS_AS(EmbeddingSet(1, {{"u,1", "s", "p", vec({1})}}), DataError);
  CHECK_NOTHROW(EmbeddingSet(1, {}));
}

TEST_CASE("save: empty set is an error, one record gives two lines") {
  CHECK_THROWS_WITH_AS(format_embeddings(EmbeddingSet(3, {})), "empty set", DataError);
  const EmbeddingSet one(2, {{"u1", "A", "F", vec({0.1, -2.0})}});
  const std::string text = format_embeddings(one);
  CHECK(text == "utt_id,spk_id,partition,dim_0,dim_1\nu1,A,F,0.10000000000000001,-2\n");
}

TEST_CASE("property: save/load round trip is exact and save is byte-idempotent") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const std::size_t dim = 1 + rng.index(8);
    const std::size_t speakers = 1 + rng.index(5);
    const std::size_t per = 1 + rng.index(4);
    EmbeddingSet set = oracle::random_set(seed, dim, speakers, per, std::exp(rng.normal(0, 3)));
    const std::string first = format_embeddings(set);
    const EmbeddingSet back = parse(first);
    REQUIRE(back.size() == set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      CHECK(back[i].utt_id == set[i].utt_id);
      CHECK(back[i].spk_id == set[i].spk_id);
      CHECK(back[i].partition == set[i].partition);
      CHECK((back[i].vector - set[i].vector).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(back[i].vector == set[i].vector);  // 17 digits: bit exact
    }
    CHECK(format_embeddings(back) == first);
  }
}

TEST_CASE("save_embeddings writes atomically to disk") {
  const auto dir = std::filesystem::temp_directory_path() / "pinhole_embedding_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "set.csv";
  const auto set = oracle::random_set(3, 4, 2, 3);
  save_embeddings(set, path);
  CHECK_FALSE(std::filesystem::exists(dir / "set.csv.tmp"));
  const auto back = load_embeddings(path);
  CHECK(format_embeddings(back) == format_embeddings(set));
  CHECK_THROWS_AS(load_embeddings(dir / "missing.csv"), DataError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("speaker_summaries") {
  SUBCASE("symmetric pair averages to zero") {
    const EmbeddingSet set(1, {{"a1", "A", "F", vec({-1})}, {"a2", "A", "F", vec({1})}});
    const auto s = speaker_summaries(set);
    REQUIRE(s.size() == 1);
    CHECK(s[0].count == 2);
    CHECK(s[0].mean[0] == 0.0);
  }
  SUBCASE("single utterance speaker keeps its vector") {
    const EmbeddingSet set(2, {{"z", "Z", "F", vec({3, 4})}, {"a", "A", "F", vec({1, 1})}});
    const auto s = speaker_summaries(set);
    CHECK(s[0].spk_id == "A");  // byte order
    CHECK(s[1].mean == vec({3, 4}));
  }
  SUBCASE("matches naive per-speaker averaging") {
    const auto set = oracle::random_set(42, 6, 5, 7);
    const auto s = speaker_summaries(set);
    const auto naive = oracle::naive_speaker_means(set);
    REQUIRE(s.size() == naive.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      total += s[i].count;
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(std::abs(s[i].mean[static_cast<Eigen::Index>(j)] - naive[i][j]) <=
              1e-12 * std::max(1.0, std::abs(naive[i][j])));
      }
    }
    CHECK(total == set.size());
  }
  SUBCASE("deviations from speaker means have zero per-speaker mean") {
    const auto set = oracle::random_set(7, 3, 4, 5, 10.0);
    const auto s = speaker_summaries(set);
    for (const auto& summary : s) {
      Vector dev = Vector::Zero(3);
      for (const auto& r : set) {
        if (r.spk_id == summary.spk_id) dev += r.vector - summary.mean;
      }
      CHECK(dev.cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  CHECK_THROWS_AS(speaker_summaries(EmbeddingSet(2, {})), DataError);
}

TEST_CASE("filter_partition") {
  const auto set = oracle::random_set(5, 2, 4, 3);
  CHECK(filter_partition(set, "X").empty());
  const auto f = filter_partition(set, "F");
  CHECK(f.size() == 6);
  std::size_t last = 0;
  for (const auto& r : f) {
    CHECK(r.partition == "F");
    const std::size_t pos = set.find(r.utt_id);
    CHECK(pos >= last);
    last = pos;
  }

  // The union over all labels is the original multiset.
  std::vector<std::string> ids;
  for (const auto& label : partitions(set)) {
    for (const auto& r : filter_partition(set, label)) ids.push_back(r.utt_id);
  }
  std::vector<std::string> original;
  for (const auto& r : set) original.push_back(r.utt_id);
  std::sort(ids.begin(), ids.end());
  std::sort(original.begin(), original.end());
  CHECK(ids == original);
}

TEST_CASE("length_normalize") {
  const EmbeddingSet set(2, {{"u", "s", "p", vec({3, 4})}, {"v", "s", "p", vec({0, 1})}});
  const auto n = length_normalize(set);
  CHECK(n[0].vector[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n[0].vector[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(n[1].vector == vec({0, 1}));

  const auto big = oracle::random_set(11, 8, 50, 20, 5.0);
  const auto once = length_normalize(big);
  const auto twice = length_normalize(once);
  for (std::size_t i = 0; i < big.size(); ++i) {
    CHECK(std::abs(once[i].vector.norm() - 1.0) <= 1e-12);
    CHECK((twice[i].vector - once[i].vector).cwiseAbs().maxCoeff() <= 1e-15);
  }

  const EmbeddingSet zero(2, {{"ok", "s", "p", vec({1, 0})}, {"bad", "s", "p", vec({0, 0})}});
  CHECK_THROWS_WITH_AS(length_normalize(zero), doctest::Contains("'bad'"), NumericalError);
}

TEST_CASE("number formatting") {
  double v = 0.0;
  CHECK(parse_double("1e-3", v));
  CHECK_FALSE(parse_double("1e-3x", v));
  CHECK_FALSE(parse_double("", v));
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
}
