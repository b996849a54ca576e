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

#include "pinhole/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "pinhole/error.hpp"

namespace pinhole {

namespace {

// Relative floor below which an eigenvalue is treated as zero.
constexpr double kEigenFloor = 1e-12;

}  // namespace

ScatterPair scatter_matrices(const EmbeddingSet& set) {
  if (set.size() < 2) {
    throw DataError("scatter needs at least 2 utterances, got " + std::to_string(set.size()));
  }
  const auto summaries = speaker_summaries(set);
  if (summaries.size() < 2) {
    throw DataError("scatter needs at least 2 speakers; between-class scatter is degenerate");
  }

  const auto d = static_cast<Eigen::Index>(set.dim());
  Vector global = Vector::Zero(d);
  for (const auto& r : set) global += r.vector;
  global /= static_cast<double>(set.size());

  // spk_id -> summary index
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < summaries.size(); ++i) slot.emplace(summaries[i].spk_id, i);

  ScatterPair pair{Matrix::Zero(d, d), Matrix::Zero(d, d), set.size(), summaries.size()};
  for (const auto& r : set) {
    const Vector dev = r.vector - summaries[slot.at(r.spk_id)].mean;
    pair.within.selfadjointView<Eigen::Lower>().rankUpdate(dev);
  }
  for (const auto& s : summaries) {
    const Vector dev = s.mean - global;
    pair.between.selfadjointView<Eigen::Lower>().rankUpdate(dev, static_cast<double>(s.count));
  }
  pair.within = pair.within.selfadjointView<Eigen::Lower>();
  pair.between = pair.between.selfadjointView<Eigen::Lower>();
  return pair;
}

ScatterReport scatter_report(const ScatterPair& pair, double ridge) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw ConfigError("ridge must be a finite nonnegative number");
  }
  const Eigen::Index d = pair.within.rows();
  if (d == 0 || pair.within.cols() != d || pair.between.rows() != d || pair.between.cols() != d) {
    throw DataError("scatter matrices must be square and of equal size");
  }

  Matrix within = pair.within;
  within.diagonal().array() += ridge * pair.within.trace() / static_cast<double>(d);

  // Definiteness test on the regularized S_w.
  Eigen::SelfAdjointEigenSolver<Matrix> within_eig(within, Eigen::EigenvaluesOnly);
  const double w_max = within_eig.eigenvalues().maxCoeff();
  const double w_min = within_eig.eigenvalues().minCoeff();
  if (!(w_max > 0.0) || !(w_min > kEigenFloor * w_max)) {
    std::string msg = "within-class scatter is singular";
    msg += ridge == 0.0 ? "; rerun with a positive ridge (e.g. --ridge 1e-8)"
                        : " even after ridge regularization (speakers with a single utterance?)";
    throw NumericalError(msg);
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(
      pair.between, within, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("generalized eigensolver failed to converge");
  }

  // Eigen normalizes eigenvectors so that W^T B W = I for the pencil (A, B).
  const Matrix& w = solver.eigenvectors();
  ScatterReport report;
  report.tr_w = (w.transpose() * within * w).trace();
  report.tr_b = (w.transpose() * pair.between * w).trace();
  report.j_trace_ratio = report.tr_b / report.tr_w;

  const Vector& lambda = solver.eigenvalues();
  const double lambda_max = std::max(lambda.maxCoeff(), 0.0);
  report.eigenvalues.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    const double v = lambda[i];
    report.eigenvalues.push_back(v < kEigenFloor * lambda_max ? 0.0 : v);
  }
  for (double v : report.eigenvalues) report.j_lda += v;
  report.n = pair.n;
  report.s = pair.s;
  report.ridge = ridge;
  return report;
}

ScatterReport dispersion_of(const EmbeddingSet& set, double ridge) {
  return scatter_report(scatter_matrices(set), ridge);
}

nlohmann::json to_json(const ScatterReport& report) {
  return {{"tr_w", report.tr_w},
          {"tr_b", report.tr_b},
          {"j_trace_ratio", report.j_trace_ratio},
          {"j_lda", report.j_lda},
          {"eigenvalues", report.eigenvalues},
          {"n", report.n},
          {"s", report.s},
          {"ridge", report.ridge}};
}

}  // namespace pinhole
