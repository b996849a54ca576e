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

#ifndef PINHOLE_DISPERSION_HPP_
#define PINHOLE_DISPERSION_HPP_

#include <cstddef>
#include <vector>

#include "json.hpp"

#include "pinhole/embedding.hpp"

namespace pinhole {

/// Default ridge, relative to trace(S_w)/d.
inline constexpr double kDefaultRidge = 1e-8;

/// Within-class and between-class scatter of a labeled set.
///
///   S_w = sum_s sum_{x in s} (x - mu_s)(x - mu_s)^T
///   S_b = sum_s N_s (mu_s - mu)(mu_s - mu)^T
///
/// Unnormalized sums, so S_w + S_b is exactly the total scatter.
struct ScatterPair {
  Matrix within;
  Matrix between;
  std::size_t n = 0;  // utterances
  std::size_t s = 0;  // speakers
};

/// Traces after projecting onto the generalized eigenvectors W of
/// S_b w = lambda S_w w, normalized so that W^T S_w W = I.
struct ScatterReport {
  double tr_w = 0.0;           // Tr(W^T S_w W)
  double tr_b = 0.0;           // Tr(W^T S_b W)
  double j_trace_ratio = 0.0;  // tr_b / tr_w
  double j_lda = 0.0;          // Tr(S_w^-1 S_b) = sum of eigenvalues
  std::vector<double> eigenvalues;  // descending, clamped at zero
  std::size_t n = 0;
  std::size_t s = 0;
  double ridge = 0.0;
};

/// Requires N >= 2 and at least two speakers; throws DataError otherwise.
ScatterPair scatter_matrices(const EmbeddingSet& set);

/// Solves the symmetric-definite pencil (S_b, S_w + ridge * trace(S_w)/d * I).
/// Throws NumericalError when the regularized S_w is not positive definite;
/// with ridge = 0 the message suggests a positive ridge.
ScatterReport scatter_report(const ScatterPair& pair, double ridge = kDefaultRidge);

ScatterReport dispersion_of(const EmbeddingSet& set, double ridge = kDefaultRidge);

nlohmann::json to_json(const ScatterReport& report);

}  // namespace pinhole

#endif  // PINHOLE_DISPERSION_HPP_
