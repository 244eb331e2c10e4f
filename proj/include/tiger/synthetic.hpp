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

// Seeded desk-scale surrogate dataset.
//
// Reactions draw latent codes around n_clusters Gaussian centres. Each enzyme
// is paired with one reaction and shares its latent. Sequence, text and
// molecule embeddings are three fixed random linear images of the latent plus
// Gaussian noise; a configured fraction of text rows is replaced by pure noise
// of matching scale. Every draw comes from CounterRng streams keyed off the
// seed, so the output is a pure function of (config, seed).

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tiger/embedding_store.hpp"

namespace tiger {

struct SyntheticConfig {
  std::size_t n_enzymes = 500;
  std::size_t n_reactions = 200;
  std::size_t latent_dim = 16;
  std::size_t seq_dim = 96;
  std::size_t text_dim = 48;  // 0 disables the text table
  std::size_t mol_dim = 32;
  std::size_t min_molecules = 2;
  std::size_t max_molecules = 4;
  double noise_std = 0.05;
  double text_corruption_fraction = 0.0;
  std::size_t n_clusters = 8;
  // Std of a reaction latent around its cluster centre (centres are N(0, I)).
  double cluster_spread = 0.5;

  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticConfig& c);
// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, SyntheticConfig& c);

struct SyntheticDataset {
  DatasetBundle bundle;
  // Text rows before corruption, same ids as bundle.enzyme_text.
  std::optional<EmbeddingTable> text_reference;
  Tensor64 reaction_latents;  // n_reactions × latent_dim
  Tensor64 enzyme_latents;    // n_enzymes × latent_dim
  Tensor64 seq_map;           // latent_dim × seq_dim
  Tensor64 text_map;          // latent_dim × text_dim (empty without text)
  Tensor64 mol_map;           // latent_dim × mol_dim
  std::vector<std::size_t> enzyme_reaction;  // paired reaction index
  std::vector<std::size_t> reaction_cluster;
  std::vector<bool> text_corrupted;
};

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& cfg,
                                            std::uint64_t seed);

}  // namespace tiger
