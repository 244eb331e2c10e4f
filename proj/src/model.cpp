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

#include "tiger/model.hpp"

#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "tiger/json_util.hpp"
#include "tiger/reaction_encoder.hpp"
#include "tiger/rng.hpp"

namespace tiger {

using json = nlohmann::json;

void Architecture::validate() const {
  if (d == 0) throw ConfigError("model.d must be positive");
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("model.heads (" + std::to_string(heads) +
                      ") must divide model.d (" + std::to_string(d) + ")");
  }
  if (!(tau_init > 0.0) || !std::isfinite(tau_init)) {
    throw ConfigError("model.tau_init must be positive");
  }
}

void to_json(json& j, const InputDims& d) {
  j = json{{"seq_dim", d.seq_dim}, {"text_dim", d.text_dim}, {"mol_dim", d.mol_dim}};
}

void from_json(const json& j, InputDims& d) {
  require_known_keys(j, {"seq_dim", "text_dim", "mol_dim"}, "dims");
  read_opt(j, "seq_dim", d.seq_dim, "dims");
  read_opt(j, "text_dim", d.text_dim, "dims");
  read_opt(j, "mol_dim", d.mol_dim, "dims");
}

void to_json(json& j, const Architecture& a) {
  j = json{{"fusion", to_string(a.fusion)},
           {"projector", to_string(a.projector)},
           {"gate", to_string(a.gate)},
           {"activation", to_string(a.activation)},
           {"d", a.d},
           {"heads", a.heads},
           {"tau_init", a.tau_init},
           {"tie_projector", a.tie_projector}};
}

void from_json(const json& j, Architecture& a) {
  constexpr const char* kSection = "model";
  require_known_keys(j, {"fusion", "projector", "gate", "activation", "d", "heads", "tau_init",
                      "tie_projector"},
                     kSection);
  std::string s;
  if (j.contains("fusion")) {
    read_opt(j, "fusion", s, kSection);
    a.fusion = fusion_mode_from_string(s);
  }
  if (j.contains("projector")) {
    read_opt(j, "projector", s, kSection);
    a.projector = projector_from_string(s);
  }
  if (j.contains("gate")) {
    read_opt(j, "gate", s, kSection);
    a.gate = gate_mode_from_string(s);
  }
  if (j.contains("activation")) {
    read_opt(j, "activation", s, kSection);
    a.activation = activation_from_string(s);
  }
  read_opt(j, "d", a.d, kSection);
  read_opt(j, "heads", a.heads, kSection);
  read_opt(j, "tau_init", a.tau_init, kSection);
  read_opt(j, "tie_projector", a.tie_projector, kSection);
}

ModelParams<float> init_model(const InputDims& dims, const Architecture& arch,
                              std::uint64_t seed) {
  arch.validate();
  if (dims.seq_dim == 0 || dims.mol_dim == 0) {
    throw ConfigError("model inputs need positive seq_dim and mol_dim");
  }
  if (arch.projector == ProjectorChoice::none && dims.mol_dim != arch.d) {
    throw ConfigError("projector 'none' needs mol_dim (" + std::to_string(dims.mol_dim) +
                      ") equal to model.d (" + std::to_string(arch.d) + ")");
  }
  if (arch.tie_projector && dims.mol_dim != arch.d) {
    throw ConfigError("tie_projector needs mol_dim (" + std::to_string(dims.mol_dim) +
                      ") equal to model.d (" + std::to_string(arch.d) + ")");
  }
  CounterRng rng(derive_seed(seed, "init"));
  ModelParams<float> p;
  p.arch = arch;
  p.dims = dims;
  p.dgn = init_dgn(rng, arch.fusion, dims.seq_dim, dims.text_dim, arch.d, arch.heads,
                   arch.activation, arch.gate);
  p.proj_e = init_projector(rng, arch.projector, arch.d, arch.d, arch.heads, arch.activation);
  if (arch.tie_projector) {
    p.proj_r.choice = arch.projector;
  } else {
    p.proj_r = init_projector(rng, arch.projector, dims.mol_dim, arch.d, arch.heads,
                              arch.activation);
  }
  p.log_tau = Tensor::scalar(static_cast<float>(std::log(arch.tau_init)));
  return p;
}

std::size_t FeatureSet::enzyme_index(const std::string& id) const {
  for (std::size_t i = 0; i < enzyme_ids.size(); ++i)
    if (enzyme_ids[i] == id) return i;
  throw LookupError("unknown enzyme id '" + id + "'");
}

std::size_t FeatureSet::reaction_index(const std::string& id) const {
  for (std::size_t i = 0; i < reaction_ids.size(); ++i)
    if (reaction_ids[i] == id) return i;
  throw LookupError("unknown reaction id '" + id + "'");
}

FeatureSet build_features(const DatasetBundle& bundle) {
  FeatureSet f;
  f.enzyme_ids = bundle.enzyme_seq.ids();
  f.seq = bundle.enzyme_seq.matrix();
  f.dims.seq_dim = bundle.enzyme_seq.dim();
  f.has_text.assign(f.enzyme_ids.size(), false);
  if (bundle.enzyme_text) {
    const EmbeddingTable& t = *bundle.enzyme_text;
    f.dims.text_dim = t.dim();
    f.text = Tensor::matrix(f.enzyme_ids.size(), t.dim());
    for (std::size_t i = 0; i < f.enzyme_ids.size(); ++i) {
      if (auto row = t.find(f.enzyme_ids[i])) {
        const auto src = t.row(*row);
        std::copy(src.begin(), src.end(), f.text.row(i).begin());
        f.has_text[i] = true;
      }
    }
  }
  const EmbeddingTable rxn = aggregate_all(bundle);
  f.reaction_ids = rxn.ids();
  f.rxn = rxn.matrix();
  f.dims.mol_dim = rxn.dim();
  return f;
}

std::vector<std::pair<std::size_t, std::size_t>> pair_rows(const DatasetBundle& bundle,
                                                           const FeatureSet&) {
  std::unordered_map<std::string, std::size_t> rxn_row;
  for (std::size_t i = 0; i < bundle.reactions.size(); ++i) {
    rxn_row.emplace(bundle.reactions[i].reaction_id, i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(bundle.pairs.size());
  for (const auto& [e, r] : bundle.pairs.pairs) {
    const auto it = rxn_row.find(r);
    if (it == rxn_row.end()) throw LookupError("reaction '" + r + "' not found");
    out.emplace_back(bundle.enzyme_seq.index_of(e), it->second);
  }
  return out;
}

template <class T>
Var<T> encode_enzymes(const Binder<T>& b, const ModelParams<T>& p,
                      const BasicTensor<T>& seq, const BasicTensor<T>& text) {
  Var<T> s = b.constant(seq);
  Var<T> fused;
  switch (p.arch.fusion) {
    case FusionMode::seq_only:
      fused = fuse_without_text(b, p.dgn, s);
      break;
    case FusionMode::concat:
      fused = fuse_concat_baseline(b, p.dgn, s, b.constant(text));
      break;
    case FusionMode::dgn:
      fused = dgn_forward(b, p.dgn, s, b.constant(text)).fused;
      break;
  }
  return project(b, p.proj_e, fused);
}

template <class T>
Var<T> encode_reactions(const Binder<T>& b, const ModelParams<T>& p,
                        const BasicTensor<T>& rxn) {
  return project(b, p.arch.tie_projector ? p.proj_e : p.proj_r, b.constant(rxn));
}

template <class T>
Var<T> batch_loss(const Binder<T>& b, const ModelParams<T>& p, const BasicTensor<T>& seq,
                  const BasicTensor<T>& text, const BasicTensor<T>& rxn, double gamma) {
  Var<T> e = encode_enzymes(b, p, seq, text);
  Var<T> r = encode_reactions(b, p, rxn);
  return retrieval_loss(similarity(e, r, b(p.log_tau)), gamma);
}

Tensor embed_enzymes(const ModelParams<float>& p, const Tensor& seq, const Tensor& text) {
  Tape<float> tape;
  Binder<float> b(tape, false);
  b.bind_all(p);
  return encode_enzymes(b, p, seq, text).value();
}

Tensor embed_reactions(const ModelParams<float>& p, const Tensor& rxn) {
  Tape<float> tape;
  Binder<float> b(tape, false);
  b.bind_all(p);
  return encode_reactions(b, p, rxn).value();
}

Tensor take_rows(const Tensor& m, const std::vector<std::size_t>& idx) {
  Tensor out = Tensor::matrix(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

#define TIGER_INSTANTIATE_MODEL(T)                                                   \
  template Var<T> encode_enzymes(const Binder<T>&, const ModelParams<T>&,            \
                                 const BasicTensor<T>&, const BasicTensor<T>&);      \
  template Var<T> encode_reactions(const Binder<T>&, const ModelParams<T>&,          \
                                   const BasicTensor<T>&);                           \
  template Var<T> batch_loss(const Binder<T>&, const ModelParams<T>&,                \
                             const BasicTensor<T>&, const BasicTensor<T>&,           \
                             const BasicTensor<T>&, double);

TIGER_INSTANTIATE_MODEL(float)
TIGER_INSTANTIATE_MODEL(double)

#undef TIGER_INSTANTIATE_MODEL

}  // namespace tiger
