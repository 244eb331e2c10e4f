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

#include "tiger/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "tiger/json_util.hpp"
#include "tiger/rng.hpp"

namespace tiger {

using json = nlohmann::json;

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("data: " + msg); };
  if (n_enzymes == 0) fail("n_enzymes must be positive");
  if (n_reactions == 0) fail("n_reactions must be positive");
  if (latent_dim == 0 || seq_dim == 0 || mol_dim == 0) {
    fail("latent_dim, seq_dim and mol_dim must be positive");
  }
  if (min_molecules == 0 || max_molecules < min_molecules) {
    fail("molecules per reaction range must satisfy 1 <= min <= max");
  }
  if (!(noise_std >= 0.0)) fail("noise_std must be >= 0");
  if (!(text_corruption_fraction >= 0.0 && text_corruption_fraction <= 1.0)) {
    fail("text_corruption_fraction must lie in [0, 1]");
  }
  if (n_clusters == 0) fail("n_clusters must be >= 1");
  if (!(cluster_spread >= 0.0)) fail("cluster_spread must be >= 0");
}

void to_json(json& j, const SyntheticConfig& c) {
  j = json{{"n_enzymes", c.n_enzymes},
           {"n_reactions", c.n_reactions},
           {"latent_dim", c.latent_dim},
           {"seq_dim", c.seq_dim},
           {"text_dim", c.text_dim},
           {"mol_dim", c.mol_dim},
           {"min_molecules", c.min_molecules},
           {"max_molecules", c.max_molecules},
           {"noise_std", c.noise_std},
           {"text_corruption_fraction", c.text_corruption_fraction},
           {"n_clusters", c.n_clusters},
           {"cluster_spread", c.cluster_spread}};
}

void from_json(const json& j, SyntheticConfig& c) {
  constexpr const char* kSection = "data";
  require_known_keys(j,
                     {"n_enzymes", "n_reactions", "latent_dim", "seq_dim",
                      "text_dim", "mol_dim", "min_molecules", "max_molecules",
                      "noise_std", "text_corruption_fraction", "n_clusters",
                      "cluster_spread"},
                     kSection);
  read_opt(j, "n_enzymes", c.n_enzymes, kSection);
  read_opt(j, "n_reactions", c.n_reactions, kSection);
  read_opt(j, "latent_dim", c.latent_dim, kSection);
  read_opt(j, "seq_dim", c.seq_dim, kSection);
  read_opt(j, "text_dim", c.text_dim, kSection);
  read_opt(j, "mol_dim", c.mol_dim, kSection);
  read_opt(j, "min_molecules", c.min_molecules, kSection);
  read_opt(j, "max_molecules", c.max_molecules, kSection);
  read_opt(j, "noise_std", c.noise_std, kSection);
  read_opt(j, "text_corruption_fraction", c.text_corruption_fraction, kSection);
  read_opt(j, "n_clusters", c.n_clusters, kSection);
  read_opt(j, "cluster_spread", c.cluster_spread, kSection);
}

namespace {

std::string make_id(char prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, i);
  return buf;
}

Tensor64 random_map(CounterRng& rng, std::size_t latent, std::size_t out) {
  Tensor64 m = Tensor64::matrix(latent, out);
  const double s = 1.0 / std::sqrt(static_cast<double>(latent));
  for (auto& v : m.data()) v = rng.normal() * s;
  return m;
}

// row(z)·map + noise_std·N(0, 1), cast to float.
void project_row(std::span<const double> z, const Tensor64& map, double noise,
                 CounterRng& noise_rng, std::span<float> out) {
  for (std::size_t j = 0; j < map.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t t = 0; t < z.size(); ++t) acc += z[t] * map(t, j);
    if (noise > 0.0) acc += noise * noise_rng.normal();
    out[j] = static_cast<float>(acc);
  }
}

}  // namespace

SyntheticDataset generate_synthetic_dataset(const SyntheticConfig& cfg,
                                            std::uint64_t seed) {
  cfg.validate();
  CounterRng structure(derive_seed(seed, "synthetic.structure"));
  CounterRng noise(derive_seed(seed, "synthetic.noise"));
  CounterRng corruption(derive_seed(seed, "synthetic.corruption"));

  const std::size_t L = cfg.latent_dim;
  SyntheticDataset out;

  Tensor64 centres = Tensor64::matrix(cfg.n_clusters, L);
  for (auto& v : centres.data()) v = structure.normal();

  out.reaction_latents = Tensor64::matrix(cfg.n_reactions, L);
  out.reaction_cluster.resize(cfg.n_reactions);
  for (std::size_t r = 0; r < cfg.n_reactions; ++r) {
    const std::size_t c = r % cfg.n_clusters;
    out.reaction_cluster[r] = c;
    for (std::size_t t = 0; t < L; ++t) {
      out.reaction_latents(r, t) = centres(c, t) + cfg.cluster_spread * structure.normal();
    }
  }

  out.seq_map = random_map(structure, L, cfg.seq_dim);
  if (cfg.text_dim > 0) out.text_map = random_map(structure, L, cfg.text_dim);
  out.mol_map = random_map(structure, L, cfg.mol_dim);

  // Every reaction gets an enzyme while enzymes last; the rest pick uniformly.
  out.enzyme_reaction.resize(cfg.n_enzymes);
  for (std::size_t e = 0; e < cfg.n_enzymes; ++e) {
    out.enzyme_reaction[e] = e < cfg.n_reactions ? e : structure.below(cfg.n_reactions);
  }
  out.enzyme_latents = Tensor64::matrix(cfg.n_enzymes, L);
  for (std::size_t e = 0; e < cfg.n_enzymes; ++e) {
    const auto src = out.reaction_latents.row(out.enzyme_reaction[e]);
    std::copy(src.begin(), src.end(), out.enzyme_latents.row(e).begin());
  }

  // Molecules: each reaction owns its molecules, split into substrates then
  // products (ceil(k/2) substrates).
  std::vector<std::string> mol_ids;
  std::vector<float> mol_values;
  DatasetBundle& b = out.bundle;
  b.reactions.resize(cfg.n_reactions);
  const std::size_t span = cfg.max_molecules - cfg.min_molecules + 1;
  std::vector<float> row(cfg.mol_dim);
  for (std::size_t r = 0; r < cfg.n_reactions; ++r) {
    const std::size_t k = cfg.min_molecules + structure.below(span);
    const std::size_t n_sub = (k + 1) / 2;
    ReactionComposition& comp = b.reactions[r];
    comp.reaction_id = make_id('R', r, 5);
    for (std::size_t j = 0; j < k; ++j) {
      const std::string id = make_id('M', r, 5) + "_" + std::to_string(j);
      project_row(out.reaction_latents.row(r), out.mol_map, cfg.noise_std, noise, row);
      mol_ids.push_back(id);
      mol_values.insert(mol_values.end(), row.begin(), row.end());
      (j < n_sub ? comp.substrate_ids : comp.product_ids).push_back(id);
    }
  }
  const std::size_t n_mol = mol_ids.size();
  b.molecules = EmbeddingTable(Modality::molecule, std::move(mol_ids),
                               Tensor::matrix(n_mol, cfg.mol_dim, std::move(mol_values)));

  std::vector<std::string> enzyme_ids(cfg.n_enzymes);
  for (std::size_t e = 0; e < cfg.n_enzymes; ++e) enzyme_ids[e] = make_id('E', e, 5);

  Tensor seq = Tensor::matrix(cfg.n_enzymes, cfg.seq_dim);
  for (std::size_t e = 0; e < cfg.n_enzymes; ++e) {
    project_row(out.enzyme_latents.row(e), out.seq_map, cfg.noise_std, noise, seq.row(e));
  }
  b.enzyme_seq = EmbeddingTable(Modality::enzyme_seq, enzyme_ids, std::move(seq));

  out.text_corrupted.assign(cfg.n_enzymes, false);
  if (cfg.text_dim > 0) {
    Tensor clean = Tensor::matrix(cfg.n_enzymes, cfg.text_dim);
    for (std::size_t e = 0; e < cfg.n_enzymes; ++e) {
      project_row(out.enzyme_latents.row(e), out.text_map, cfg.noise_std, noise, clean.row(e));
    }
    double ss = 0.0;
    for (const float v : clean.data()) ss += static_cast<double>(v) * v;
    const double rms = std::sqrt(ss / static_cast<double>(clean.size()));

    const auto n_bad = static_cast<std::size_t>(
        std::llround(cfg.text_corruption_fraction * static_cast<double>(cfg.n_enzymes)));
    std::vector<std::size_t> order(cfg.n_enzymes);
    std::iota(order.begin(), order.end(), std::size_t{0});
    corruption.shuffle(order.begin(), order.end());
    for (std::size_t i = 0; i < n_bad; ++i) out.text_corrupted[order[i]] = true;

    Tensor text = clean;
    for (std::size_t e = 0; e < cfg.n_enzymes; ++e) {
      if (!out.text_corrupted[e]) continue;
      for (auto& v : text.row(e)) v = static_cast<float>(rms * corruption.normal());
    }
    b.enzyme_text = EmbeddingTable(Modality::enzyme_text, enzyme_ids, std::move(text));
    out.text_reference = EmbeddingTable(Modality::enzyme_text, enzyme_ids, std::move(clean));
  }

  // Timestamps follow latent-cluster order, then enzyme index; one day apart.
  std::vector<std::size_t> by_cluster(cfg.n_enzymes);
  std::iota(by_cluster.begin(), by_cluster.end(), std::size_t{0});
  std::stable_sort(by_cluster.begin(), by_cluster.end(), [&](std::size_t a, std::size_t c) {
    return out.reaction_cluster[out.enzyme_reaction[a]] <
           out.reaction_cluster[out.enzyme_reaction[c]];
  });
  constexpr std::int64_t kEpoch = 1577836800;  // 2020-01-01T00:00:00Z
  Timestamps ts;
  for (std::size_t pos = 0; pos < by_cluster.size(); ++pos) {
    ts[enzyme_ids[by_cluster[pos]]] = kEpoch + static_cast<std::int64_t>(pos) * 86400;
  }
  b.enzyme_timestamps = std::move(ts);

  for (std::size_t e = 0; e < cfg.n_enzymes; ++e) {
    b.pairs.pairs.emplace_back(enzyme_ids[e], b.reactions[out.enzyme_reaction[e]].reaction_id);
  }
  b.validate();
  return out;
}

}  // namespace tiger
