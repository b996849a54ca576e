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

#ifndef PINHOLE_EMBEDDING_HPP_
#define PINHOLE_EMBEDDING_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace pinhole {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One utterance embedding with its labels.
struct UtteranceRecord {
  std::string utt_id;
  std::string spk_id;
  std::string partition;
  Vector vector;
};

/// True for identifiers made only of [A-Za-z0-9_.-] (and at least one char).
bool is_valid_id(std::string_view id);

/// An immutable, validated collection of utterance embeddings sharing one
/// dimensionality. Record order is significant and preserved by every
/// operation that returns a set.
///
/// Construction enforces: dim >= 1, every vector has length dim, every
/// coordinate finite, utt_ids unique, all labels valid identifiers. An empty
/// record list is allowed (filters may legitimately produce one); operations
/// that need data check for it themselves.
class EmbeddingSet {
 public:
  EmbeddingSet(std::size_t dim, std::vector<UtteranceRecord> records);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::span<const UtteranceRecord> records() const { return records_; }
  const UtteranceRecord& operator[](std::size_t i) const { return records_[i]; }
  auto begin() const { return records_.cbegin(); }
  auto end() const { return records_.cend(); }

  /// Distinct speaker ids in byte-lexicographic order.
  std::vector<std::string> speakers() const;
  std::size_t speaker_count() const { return speakers().size(); }

  /// Index of the record with this utt_id, or npos.
  std::size_t find(std::string_view utt_id) const;
  bool contains(std::string_view utt_id) const { return find(utt_id) != npos; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t dim_;
  std::vector<UtteranceRecord> records_;
  std::unordered_map<std::string, std::size_t> by_utt_;
};

/// Per-speaker utterance count and arithmetic mean.
struct SpeakerSummary {
  std::string spk_id;
  std::size_t count = 0;
  Vector mean;
};

// ---------------------------------------------------------------------------
// Embedding CSV
//
//   utt_id,spk_id,partition,dim_0,...,dim_{d-1}
//   <one record per line, LF endings, no quoting>
//
// Coordinates are written with 17 significant digits so a save/load cycle
// reproduces every double exactly. Errors name the 1-based line number
// ("row"), counting the header as row 1.

EmbeddingSet read_embeddings(std::istream& in);
EmbeddingSet load_embeddings(const std::filesystem::path& path);

void write_embeddings(const EmbeddingSet& set, std::ostream& out);
std::string format_embeddings(const EmbeddingSet& set);
/// Atomic: the target is replaced only after the whole file is written.
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

// ---------------------------------------------------------------------------

/// One summary per distinct speaker, sorted by spk_id. Throws DataError on
/// an empty set.
std::vector<SpeakerSummary> speaker_summaries(const EmbeddingSet& set);

/// Records whose partition equals `partition`, in original order. May be
/// empty.
EmbeddingSet filter_partition(const EmbeddingSet& set, std::string_view partition);

/// Distinct partition labels, sorted.
std::vector<std::string> partitions(const EmbeddingSet& set);

/// Scales every vector to unit Euclidean norm. Throws NumericalError naming
/// the first zero-norm utterance.
EmbeddingSet length_normalize(const EmbeddingSet& set);

/// Unit-norm copy of v; throws NumericalError if v is zero. `what` names the
/// vector in the message.
Vector unit(const Vector& v, std::string_view what);

}  // namespace pinhole

#endif  // PINHOLE_EMBEDDING_HPP_
