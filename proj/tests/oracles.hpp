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

// Independent reference implementations used only by the tests. They share
// no code path with the library beyond the data types.

#ifndef PINHOLE_TESTS_ORACLES_HPP_
#define PINHOLE_TESTS_ORACLES_HPP_

#include <cstdint>
#include <vector>

#include "pinhole/asv.hpp"
#include "pinhole/embedding.hpp"

namespace pinhole::oracle {

/// Brute-force EER: every candidate threshold is evaluated by a full scan of
/// all scores, and the crossing is found by testing every segment.
double oracle_eer(const ScoreSet& scores);

/// Plain loops over std::vector<double>: per-speaker means.
std::vector<std::vector<double>> naive_speaker_means(const EmbeddingSet& set);

/// Total scatter sum (x - mu)(x - mu)^T with explicit loops.
Matrix total_scatter(const EmbeddingSet& set);

/// Within/between scatter with explicit loops, for cross-checking.
void naive_scatter(const EmbeddingSet& set, Matrix& within, Matrix& between);

/// Tr(S_w^-1 S_b) through a linear solve (no eigendecomposition).
double direct_trace_ratio(const Matrix& within, const Matrix& between);

/// Labels every (speaker, utterance) pair by comparing speaker strings.
bool all_pairs_label(const EmbeddingSet& test, const Trial& trial);

/// Random embedding set: `speakers` speakers, `per_speaker` utterances each,
/// Gaussian clusters in `dim` dimensions.
EmbeddingSet random_set(std::uint64_t seed, std::size_t dim, std::size_t speakers,
                        std::size_t per_speaker, double spread = 1.0, double noise = 0.3);

}  // namespace pinhole::oracle

#endif  // PINHOLE_TESTS_ORACLES_HPP_
