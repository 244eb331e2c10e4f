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

#include <string>
#include <vector>

#include "tiger/embedding_store.hpp"

namespace tiger {

struct ReactionEmbedding {
  std::string reaction_id;
  std::vector<float> vector;
};

// Mean of the molecule embeddings over substrates and products, counted as a
// multiset: a molecule listed on both sides contributes twice. The sum is
// accumulated in double.
ReactionEmbedding aggregate_reaction(const ReactionComposition& comp,
                                     const EmbeddingTable& molecules);

// One row per bundle reaction, in bundle order.
EmbeddingTable aggregate_all(const DatasetBundle& bundle);

}  // namespace tiger
