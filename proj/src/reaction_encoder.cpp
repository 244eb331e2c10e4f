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

#include "tiger/reaction_encoder.hpp"

namespace tiger {

ReactionEmbedding aggregate_reaction(const ReactionComposition& comp,
                                     const EmbeddingTable& molecules) {
  const std::size_t count = comp.substrate_ids.size() + comp.product_ids.size();
  if (count == 0) {
    throw DomainError("reaction '" + comp.reaction_id + "' has no substrates or products");
  }
  std::vector<double> acc(molecules.dim(), 0.0);
  for (const auto* side : {&comp.substrate_ids, &comp.product_ids}) {
    for (const auto& id : *side) {
      const auto row = molecules.row(molecules.index_of(id));
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += row[j];
    }
  }
  ReactionEmbedding out{comp.reaction_id, std::vector<float>(acc.size())};
  for (std::size_t j = 0; j < acc.size(); ++j) {
    out.vector[j] = static_cast<float>(acc[j] / static_cast<double>(count));
  }
  return out;
}

EmbeddingTable aggregate_all(const DatasetBundle& bundle) {
  const std::size_t dim = bundle.molecules.dim();
  Tensor m = Tensor::matrix(bundle.reactions.size(), dim);
  std::vector<std::string> ids;
  ids.reserve(bundle.reactions.size());
  for (std::size_t r = 0; r < bundle.reactions.size(); ++r) {
    ReactionEmbedding e = aggregate_reaction(bundle.reactions[r], bundle.molecules);
    std::copy(e.vector.begin(), e.vector.end(), m.row(r).begin());
    ids.push_back(std::move(e.reaction_id));
  }
  return EmbeddingTable(Modality::reaction, std::move(ids), std::move(m));
}

}  // namespace tiger
