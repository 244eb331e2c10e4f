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

#include "tiger/embedding_store.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tiger/io.hpp"

namespace tiger {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'G', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
  return v;
}

}  // namespace

std::string to_string(Modality m) {
  switch (m) {
    case Modality::enzyme_seq: return "enzyme_seq";
    case Modality::enzyme_text: return "enzyme_text";
    case Modality::molecule: return "molecule";
    case Modality::reaction: return "reaction";
  }
  return "unknown";
}

Modality modality_from_string(const std::string& s) {
  if (s == "enzyme_seq") return Modality::enzyme_seq;
  if (s == "enzyme_text") return Modality::enzyme_text;
  if (s == "molecule") return Modality::molecule;
  if (s == "reaction") return Modality::reaction;
  throw FormatError("unknown modality '" + s + "'");
}

// ---- EmbeddingTable ----------------------------------------------------------

EmbeddingTable::EmbeddingTable(Modality modality, std::vector<std::string> ids,
                               Tensor matrix)
    : modality_(modality), ids_(std::move(ids)), matrix_(std::move(matrix)) {
  if (matrix_.rank() != 2) {
    throw ShapeError("embedding matrix must be rank 2, got " +
                     shape_str(matrix_.shape()));
  }
  if (matrix_.rows() != ids_.size()) {
    throw ConsistencyError("embedding table has " + std::to_string(ids_.size()) +
                           " ids but " + std::to_string(matrix_.rows()) + " rows");
  }
  if (matrix_.cols() == 0) throw ConsistencyError("embedding dim must be positive");
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw ConsistencyError("duplicate id '" + ids_[i] + "' in " +
                             to_string(modality_) + " table");
    }
  }
  for (std::size_t r = 0; r < matrix_.rows(); ++r) {
    for (const float v : matrix_.row(r)) {
      if (!std::isfinite(v)) {
        throw DataError("non-finite value in " + to_string(modality_) +
                        " table at row " + std::to_string(r));
      }
    }
  }
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddingTable::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw LookupError("id '" + id + "' not found in " + to_string(modality_) +
                      " table");
  }
  return it->second;
}

Tensor EmbeddingTable::gather(std::span<const std::size_t> indices) const {
  Tensor out = Tensor::matrix(indices.size(), dim());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = matrix_.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// ---- DatasetBundle -----------------------------------------------------------

void DatasetBundle::validate() const {
  if (enzyme_text) {
    for (const auto& id : enzyme_text->ids()) {
      if (!enzyme_seq.find(id)) {
        throw ConsistencyError("text embedding for unknown enzyme '" + id + "'");
      }
    }
  }
  if (enzyme_timestamps) {
    for (const auto& id : enzyme_seq.ids()) {
      if (!enzyme_timestamps->contains(id)) {
        throw ConsistencyError("timestamps must cover all enzymes or none; '" +
                               id + "' has none");
      }
    }
    for (const auto& [id, ts] : *enzyme_timestamps) {
      if (!enzyme_seq.find(id)) {
        throw ConsistencyError("timestamp for unknown enzyme '" + id + "'");
      }
    }
  }
  std::set<std::string> reaction_ids;
  for (const auto& r : reactions) {
    if (!reaction_ids.insert(r.reaction_id).second) {
      throw ConsistencyError("duplicate reaction id '" + r.reaction_id + "'");
    }
    if (r.substrate_ids.empty() && r.product_ids.empty()) {
      throw ConsistencyError("reaction '" + r.reaction_id + "' has no molecules");
    }
    for (const auto* side : {&r.substrate_ids, &r.product_ids}) {
      for (const auto& m : *side) {
        if (!molecules.find(m)) {
          throw LookupError("reaction '" + r.reaction_id +
                            "' references unknown molecule '" + m + "'");
        }
      }
    }
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : pairs.pairs) {
    if (!seen.insert(p).second) {
      throw ConsistencyError("duplicate pair (" + p.first + ", " + p.second + ")");
    }
    if (!enzyme_seq.find(p.first)) {
      throw LookupError("pair references unknown enzyme '" + p.first + "'");
    }
    if (!reaction_ids.contains(p.second)) {
      throw LookupError("pair references unknown reaction '" + p.second + "'");
    }
  }
}

std::size_t DatasetBundle::reaction_index(const std::string& id) const {
  for (std::size_t i = 0; i < reactions.size(); ++i) {
    if (reactions[i].reaction_id == id) return i;
  }
  throw LookupError("reaction '" + id + "' not found");
}

// ---- TGEM --------------------------------------------------------------------

void write_embedding_table(const EmbeddingTable& table,
                           const fs::path& binary_path,
                           const fs::path& manifest_path) {
  std::string bytes;
  bytes.reserve(kHeaderBytes + table.matrix().size() * 4);
  bytes.append(kMagic.data(), kMagic.size());
  put_u32(bytes, kVersion);
  put_u32(bytes, static_cast<std::uint32_t>(table.rows()));
  put_u32(bytes, static_cast<std::uint32_t>(table.dim()));
  for (const float v : table.matrix().data()) put_u32(bytes, std::bit_cast<std::uint32_t>(v));
  write_file(binary_path, bytes);

  json manifest;
  manifest["modality"] = to_string(table.modality());
  manifest["dim"] = table.dim();
  manifest["ids"] = table.ids();
  write_json(manifest_path, manifest);
}

EmbeddingTable load_embedding_table(const fs::path& binary_path,
                                    const fs::path& manifest_path) {
  const std::string bytes = read_file(binary_path);
  const std::string where = "'" + binary_path.string() + "'";
  if (bytes.size() < kHeaderBytes) {
    throw FormatError(where + " is truncated (no complete header)");
  }
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError(where + " has bad magic (expected TGEM)");
  }
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kVersion) {
    throw FormatError(where + " has unsupported version " + std::to_string(version));
  }
  const std::uint32_t rows = get_u32(bytes, 8);
  const std::uint32_t dim = get_u32(bytes, 12);
  const std::uint64_t expected =
      kHeaderBytes + static_cast<std::uint64_t>(rows) * dim * 4;
  if (bytes.size() != expected) {
    throw FormatError(where + " has " + std::to_string(bytes.size()) +
                      " bytes, header implies " + std::to_string(expected));
  }

  const json manifest = read_json(manifest_path);
  const std::string mwhere = "'" + manifest_path.string() + "'";
  if (!manifest.is_object() || !manifest.contains("dim") ||
      !manifest.contains("ids") || !manifest.contains("modality")) {
    throw FormatError(mwhere + " must be an object with modality, dim, ids");
  }
  std::vector<std::string> ids;
  try {
    if (manifest.at("dim").get<std::uint64_t>() != dim) {
      throw ConsistencyError(mwhere + " dim " + manifest.at("dim").dump() +
                             " differs from binary header dim " + std::to_string(dim));
    }
    ids = manifest.at("ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(mwhere + ": " + e.what());
  }
  if (ids.size() != rows) {
    throw ConsistencyError(mwhere + " lists " + std::to_string(ids.size()) +
                           " ids, binary has " + std::to_string(rows) + " rows");
  }
  const Modality modality = modality_from_string(manifest.at("modality").get<std::string>());

  std::vector<float> data(static_cast<std::size_t>(rows) * dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  }
  return EmbeddingTable(modality, std::move(ids),
                        Tensor::matrix(rows, dim, std::move(data)));
}

fs::path manifest_for(const fs::path& binary_path) {
  fs::path p = binary_path;
  p.replace_extension(".json");
  return p;
}

// ---- pairs -------------------------------------------------------------------

PairSet parse_pairs(const std::string& text) {
  PairSet out;
  std::set<std::pair<std::string, std::string>> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("pairs line " + std::to_string(lineno) +
                       ": expected exactly two tab-separated fields");
    }
    std::pair<std::string, std::string> p{line.substr(0, tab), line.substr(tab + 1)};
    if (!seen.insert(p).second) {
      throw ConsistencyError("pairs line " + std::to_string(lineno) +
                             ": duplicate pair (" + p.first + ", " + p.second + ")");
    }
    out.pairs.push_back(std::move(p));
  }
  return out;
}

PairSet load_pairs(const fs::path& path) { return parse_pairs(read_file(path)); }

void write_pairs(const PairSet& pairs, const fs::path& path) {
  std::string out = "# enzyme_id\treaction_id\n";
  for (const auto& [e, r] : pairs.pairs) out += e + "\t" + r + "\n";
  write_file(path, out);
}

// ---- compositions / timestamps ------------------------------------------------

std::vector<ReactionComposition> load_compositions(const fs::path& path) {
  const json j = read_json(path);
  if (!j.is_array()) throw FormatError("'" + path.string() + "' must be a JSON array");
  std::vector<ReactionComposition> out;
  out.reserve(j.size());
  try {
    for (const auto& item : j) {
      ReactionComposition r;
      r.reaction_id = item.at("reaction_id").get<std::string>();
      r.substrate_ids = item.at("substrates").get<std::vector<std::string>>();
      r.product_ids = item.at("products").get<std::vector<std::string>>();
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
  return out;
}

void write_compositions(const std::vector<ReactionComposition>& reactions,
                        const fs::path& path) {
  json j = json::array();
  for (const auto& r : reactions) {
    j.push_back({{"reaction_id", r.reaction_id},
                 {"substrates", r.substrate_ids},
                 {"products", r.product_ids}});
  }
  write_json(path, j);
}

Timestamps load_timestamps(const fs::path& path) {
  const json j = read_json(path);
  try {
    return j.get<Timestamps>();
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

void write_timestamps(const Timestamps& ts, const fs::path& path) {
  write_json(path, json(ts));
}

// ---- dataset directory --------------------------------------------------------

void write_dataset_dir(const DatasetBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  using L = DatasetLayout;
  write_embedding_table(bundle.enzyme_seq, L::binary(dir, L::kEnzymeSeq),
                        L::manifest(dir, L::kEnzymeSeq));
  if (bundle.enzyme_text) {
    write_embedding_table(*bundle.enzyme_text, L::binary(dir, L::kEnzymeText),
                          L::manifest(dir, L::kEnzymeText));
  }
  write_embedding_table(bundle.molecules, L::binary(dir, L::kMolecules),
                        L::manifest(dir, L::kMolecules));
  write_compositions(bundle.reactions, dir / L::kReactions);
  write_pairs(bundle.pairs, dir / L::kPairs);
  if (bundle.enzyme_timestamps) {
    write_timestamps(*bundle.enzyme_timestamps, dir / L::kTimestamps);
  }
}

DatasetBundle load_dataset_dir(const fs::path& dir) {
  using L = DatasetLayout;
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  DatasetBundle b;
  b.enzyme_seq = load_embedding_table(L::binary(dir, L::kEnzymeSeq),
                                      L::manifest(dir, L::kEnzymeSeq));
  if (fs::exists(L::binary(dir, L::kEnzymeText))) {
    b.enzyme_text = load_embedding_table(L::binary(dir, L::kEnzymeText),
                                         L::manifest(dir, L::kEnzymeText));
  }
  b.molecules = load_embedding_table(L::binary(dir, L::kMolecules),
                                     L::manifest(dir, L::kMolecules));
  b.reactions = load_compositions(dir / L::kReactions);
  b.pairs = load_pairs(dir / L::kPairs);
  if (fs::exists(dir / L::kTimestamps)) {
    b.enzyme_timestamps = load_timestamps(dir / L::kTimestamps);
  }
  b.validate();
  return b;
}

}  // namespace tiger
