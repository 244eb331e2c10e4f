// Copyright 2026 The tiger-retrieval Authors
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

#pragma once

// Precomputed modality embeddings and association pairs.
//
// TGEM binary layout (all little-endian):
//   bytes 0-3   magic "TGEM"
//   u32         version (1)
//   u32         rows
//   u32         dim
//   f32 × rows·dim, row-major
// Each binary has a JSON manifest {"dim": n, "ids": [...], "modality": "..."}
// whose ids name the rows in order.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tiger/tensor.hpp"

namespace tiger {

enum class Modality { enzyme_seq, enzyme_text, molecule, reaction };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  // Validates unique ids, row count and finiteness. `matrix` is rows×dim.
  EmbeddingTable(Modality modality, std::vector<std::string> ids, Tensor matrix);

  Modality modality() const { return modality_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const Tensor& matrix() const { return matrix_; }
  std::size_t rows() const { return ids_.size(); }
  std::size_t dim() const { return matrix_.cols(); }

  std::optional<std::size_t> find(const std::string& id) const;
  // Throws LookupError naming the id.
  std::size_t index_of(const std::string& id) const;
  std::span<const float> row(std::size_t i) const { return matrix_.row(i); }

  // Rows `indices` stacked into a matrix, in the given order.
  Tensor gather(std::span<const std::size_t> indices) const;

 private:
  Modality modality_ = Modality::enzyme_seq;
  std::vector<std::string> ids_;
  Tensor matrix_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ReactionComposition {
  std::string reaction_id;
  std::vector<std::string> substrate_ids;
  std::vector<std::string> product_ids;
};

struct PairSet {
  std::vector<std::pair<std::string, std::string>> pairs;  // (enzyme, reaction)

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

using Timestamps = std::map<std::string, std::int64_t>;

struct DatasetBundle {
  EmbeddingTable enzyme_seq;
  std::optional<EmbeddingTable> enzyme_text;
  std::optional<Timestamps> enzyme_timestamps;
  EmbeddingTable molecules;
  std::vector<ReactionComposition> reactions;
  PairSet pairs;

  // Checks the cross-table invariants; throws ConsistencyError / LookupError.
  void validate() const;
  std::size_t reaction_index(const std::string& id) const;
};

// ---- file formats ------------------------------------------------------------

void write_embedding_table(const EmbeddingTable& table,
                           const std::filesystem::path& binary_path,
                           const std::filesystem::path& manifest_path);
EmbeddingTable load_embedding_table(const std::filesystem::path& binary_path,
                                    const std::filesystem::path& manifest_path);

// One `enzyme_id<TAB>reaction_id` per line; `#` lines and blank lines skipped.
PairSet load_pairs(const std::filesystem::path& path);
PairSet parse_pairs(const std::string& text);
void write_pairs(const PairSet& pairs, const std::filesystem::path& path);

// JSON array of {"reaction_id", "substrates": [...], "products": [...]}.
std::vector<ReactionComposition> load_compositions(
    const std::filesystem::path& path);
void write_compositions(const std::vector<ReactionComposition>& reactions,
                        const std::filesystem::path& path);

// JSON object {enzyme_id: epoch_seconds}.
Timestamps load_timestamps(const std::filesystem::path& path);
void write_timestamps(const Timestamps& ts, const std::filesystem::path& path);

// Standard file names inside a dataset directory.
struct DatasetLayout {
  static constexpr const char* kEnzymeSeq = "enzyme_seq";
  static constexpr const char* kEnzymeText = "enzyme_text";
  static constexpr const char* kEnzymeTextReference = "enzyme_text_reference";
  static constexpr const char* kMolecules = "molecules";
  static constexpr const char* kReactions = "reactions.json";
  static constexpr const char* kPairs = "pairs.tsv";
  static constexpr const char* kTimestamps = "timestamps.json";

  static std::filesystem::path binary(const std::filesystem::path& dir,
                                      const char* stem) {
    return dir / (std::string(stem) + ".tgem");
  }
  static std::filesystem::path manifest(const std::filesystem::path& dir,
                                        const char* stem) {
    return dir / (std::string(stem) + ".json");
  }
};

void write_dataset_dir(const DatasetBundle& bundle,
                       const std::filesystem::path& dir);
DatasetBundle load_dataset_dir(const std::filesystem::path& dir);

// Manifest path paired with a .tgem binary: same stem, .json extension.
std::filesystem::path manifest_for(const std::filesystem::path& binary_path);

}  // namespace tiger
