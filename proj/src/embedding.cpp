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

#include "pinhole/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "pinhole/error.hpp"
#include "pinhole/io.hpp"

namespace pinhole {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string row_tag(std::size_t row) { return " at row " + std::to_string(row); }

}  // namespace

bool is_valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '.' || c == '-';
  });
}

EmbeddingSet::EmbeddingSet(std::size_t dim, std::vector<UtteranceRecord> records)
    : dim_(dim), records_(std::move(records)) {
  if (dim_ == 0) throw DataError("embedding dimension must be >= 1");
  by_utt_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const UtteranceRecord& r = records_[i];
    if (!is_valid_id(r.utt_id) || !is_valid_id(r.spk_id) || !is_valid_id(r.partition)) {
      throw DataError("invalid identifier in record " + std::to_string(i) + " ('" +
                      r.utt_id + "')");
    }
    if (static_cast<std::size_t>(r.vector.size()) != dim_) {
      throw DataError("utterance '" + r.utt_id + "' has dimension " +
                      std::to_string(r.vector.size()) + ", expected " + std::to_string(dim_));
    }
    if (!r.vector.allFinite()) {
      throw DataError("utterance '" + r.utt_id + "' has a non-finite coordinate");
    }
    if (!by_utt_.emplace(r.utt_id, i).second) {
      throw DataError("duplicate utt_id '" + r.utt_id + "'");
    }
  }
}

std::vector<std::string> EmbeddingSet::speakers() const {
  std::set<std::string> ids;
  for (const auto& r : records_) ids.insert(r.spk_id);
  return {ids.begin(), ids.end()};
}

std::size_t EmbeddingSet::find(std::string_view utt_id) const {
  auto it = by_utt_.find(std::string(utt_id));
  return it == by_utt_.end() ? npos : it->second;
}

EmbeddingSet read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file");

  const auto header = split_commas(line);
  static constexpr std::string_view kFixed[] = {"utt_id", "spk_id", "partition"};
  bool header_ok = header.size() >= 4;
  for (std::size_t i = 0; header_ok && i < 3; ++i) header_ok = header[i] == kFixed[i];
  for (std::size_t i = 3; header_ok && i < header.size(); ++i) {
    header_ok = header[i] == "dim_" + std::to_string(i - 3);
  }
  if (!header_ok) {
    throw DataError("malformed header at row 1: expected utt_id,spk_id,partition,dim_0,...");
  }
  const std::size_t dim = header.size() - 3;

  std::vector<UtteranceRecord> records;
  std::set<std::string, std::less<>> seen;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw DataError("inconsistent row width" + row_tag(row) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (!is_valid_id(fields[i])) {
        throw DataError("invalid " + std::string(kFixed[i]) + " '" + std::string(fields[i]) +
                        "'" + row_tag(row) + " (allowed: [A-Za-z0-9_.-]+)");
      }
    }
    UtteranceRecord rec{std::string(fields[0]), std::string(fields[1]),
                        std::string(fields[2]), Vector(static_cast<Eigen::Index>(dim))};
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0.0;
      if (!parse_double(fields[3 + j], v)) {
        throw DataError("non-numeric coordinate '" + std::string(fields[3 + j]) + "'" +
                        row_tag(row) + ", column dim_" + std::to_string(j));
      }
      if (!std::isfinite(v)) {
        throw DataError("non-finite coordinate" + row_tag(row) + ", column dim_" +
                        std::to_string(j));
      }
      rec.vector[static_cast<Eigen::Index>(j)] = v;
    }
    if (!seen.insert(rec.utt_id).second) {
      throw DataError("duplicate utt_id '" + rec.utt_id + "'" + row_tag(row));
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw DataError("no records after header");
  return EmbeddingSet(dim, std::move(records));
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings file '" + path.string() + "'");
  try {
    return read_embeddings(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_embeddings(const EmbeddingSet& set, std::ostream& out) {
  if (set.empty()) throw DataError("empty set");
  out << "utt_id,spk_id,partition";
  for (std::size_t j = 0; j < set.dim(); ++j) out << ",dim_" << j;
  out << '\n';
  for (const auto& r : set) {
    out << r.utt_id << ',' << r.spk_id << ',' << r.partition;
    for (Eigen::Index j = 0; j < r.vector.size(); ++j) out << ',' << format_double(r.vector[j]);
    out << '\n';
  }
}

std::string format_embeddings(const EmbeddingSet& set) {
  std::ostringstream ss;
  write_embeddings(set, ss);
  return ss.str();
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, format_embeddings(set));
}

std::vector<SpeakerSummary> speaker_summaries(const EmbeddingSet& set) {
  if (set.empty()) throw DataError("speaker_summaries: empty set");
  std::map<std::string, SpeakerSummary> acc;
  for (const auto& r : set) {
    auto [it, inserted] = acc.try_emplace(r.spk_id);
    SpeakerSummary& s = it->second;
    if (inserted) {
      s.spk_id = r.spk_id;
      s.mean = Vector::Zero(static_cast<Eigen::Index>(set.dim()));
    }
    s.mean += r.vector;
    ++s.count;
  }
  std::vector<SpeakerSummary> out;
  out.reserve(acc.size());
  for (auto& [id, s] : acc) {
    s.mean /= static_cast<double>(s.count);
    out.push_back(std::move(s));
  }
  return out;
}

EmbeddingSet filter_partition(const EmbeddingSet& set, std::string_view partition) {
  std::vector<UtteranceRecord> kept;
  for (const auto& r : set) {
    if (r.partition == partition) kept.push_back(r);
  }
  return EmbeddingSet(set.dim(), std::move(kept));
}

std::vector<std::string> partitions(const EmbeddingSet& set) {
  std::set<std::string> labels;
  for (const auto& r : set) labels.insert(r.partition);
  return {labels.begin(), labels.end()};
}

Vector unit(const Vector& v, std::string_view what) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NumericalError("zero-norm vector: " + std::string(what));
  }
  return v / norm;
}

EmbeddingSet length_normalize(const EmbeddingSet& set) {
  std::vector<UtteranceRecord> out(set.begin(), set.end());
  for (auto& r : out) r.vector = unit(r.vector, "utterance '" + r.utt_id + "'");
  return EmbeddingSet(set.dim(), std::move(out));
}

}  // namespace pinhole
