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

// Full retrieval model: enzyme fusion, per-side projectors, learnable
// temperature. Forward passes work on row-stacked feature matrices.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tiger/contrastive.hpp"
#include "tiger/embedding_store.hpp"
#include "tiger/fusion.hpp"
#include "tiger/projector.hpp"

namespace tiger {

struct InputDims {
  std::size_t seq_dim = 0;
  std::size_t text_dim = 0;  // 0 when the bundle has no text table
  std::size_t mol_dim = 0;
};

// Architecture switches swept by the ablation harness.
struct Architecture {
  FusionMode fusion = FusionMode::dgn;
  ProjectorChoice projector = ProjectorChoice::ssfp;
  GateMode gate = GateMode::per_dim;
  Activation activation = Activation::relu;
  std::size_t d = 32;
  std::size_t heads = 4;
  double tau_init = 0.07;
  // One projector parameter set for both branches; needs mol_dim == d.
  bool tie_projector = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const InputDims& d);
void from_json(const nlohmann::json& j, InputDims& d);
void to_json(nlohmann::json& j, const Architecture& a);
void from_json(const nlohmann::json& j, Architecture& a);

template <class T>
struct ModelParams {
  Architecture arch;
  InputDims dims;
  DgnParams<T> dgn;
  ProjectorParams<T> proj_e;
  ProjectorParams<T> proj_r;  // unused when arch.tie_projector
  BasicTensor<T> log_tau;  // rank 0; tau = exp(log_tau)

  double tau() const { return std::exp(static_cast<double>(log_tau.item())); }

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    DgnParams<T>::visit(self.dgn, prefix + "dgn.", f);
    ProjectorParams<T>::visit(self.proj_e, prefix + "proj_e.", f);
    if (!self.arch.tie_projector) {
      ProjectorParams<T>::visit(self.proj_r, prefix + "proj_r.", f);
    }
    f(prefix + "log_tau", self.log_tau);
  }
};

template <class U, class T>
ModelParams<U> cast_block(const ModelParams<T>& p) {
  return {p.arch, p.dims, cast_block<U>(p.dgn), cast_block<U>(p.proj_e),
          cast_block<U>(p.proj_r), p.log_tau.template cast<U>()};
}

// Weights uniform(±1/sqrt(fan_in)), biases 0, LayerNorm gain 1 / bias 0,
// log_tau = ln(tau_init). ConfigError for an inconsistent architecture (text
// fusion without text, `none` or tied projector with mol_dim != d, heads not
// dividing d).
ModelParams<float> init_model(const InputDims& dims, const Architecture& arch,
                              std::uint64_t seed);

// Row-aligned model inputs for a dataset. Enzymes without a text row get a
// zero text vector.
struct FeatureSet {
  InputDims dims;
  std::vector<std::string> enzyme_ids;
  std::vector<std::string> reaction_ids;
  Tensor seq;   // n_enzymes × seq_dim
  Tensor text;  // n_enzymes × text_dim, empty when text_dim == 0
  Tensor rxn;   // n_reactions × mol_dim, molecule-mean reaction vectors
  std::vector<bool> has_text;

  std::size_t enzyme_index(const std::string& id) const;
  std::size_t reaction_index(const std::string& id) const;
};

FeatureSet build_features(const DatasetBundle& bundle);

// Index form of bundle.pairs: (enzyme row, reaction row) in FeatureSet order.
std::vector<std::pair<std::size_t, std::size_t>> pair_rows(
    const DatasetBundle& bundle, const FeatureSet& features);

// Enzyme representations in the shared space. `text` may be empty when the
// fusion mode ignores it.
template <class T>
Var<T> encode_enzymes(const Binder<T>& b, const ModelParams<T>& p,
                      const BasicTensor<T>& seq, const BasicTensor<T>& text);
template <class T>
Var<T> encode_reactions(const Binder<T>& b, const ModelParams<T>& p,
                        const BasicTensor<T>& rxn);

// Retrieval loss of one batch of positive pairs (row i of each input belongs
// to pair i).
template <class T>
Var<T> batch_loss(const Binder<T>& b, const ModelParams<T>& p,
                  const BasicTensor<T>& seq, const BasicTensor<T>& text,
                  const BasicTensor<T>& rxn, double gamma);

// Inference-only embeddings (no gradients recorded).
Tensor embed_enzymes(const ModelParams<float>& p, const Tensor& seq,
                     const Tensor& text);
Tensor embed_reactions(const ModelParams<float>& p, const Tensor& rxn);

// Rows `idx` of `m`.
Tensor take_rows(const Tensor& m, const std::vector<std::size_t>& idx);

}  // namespace tiger
