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

// Train/test partitions of a bundle's pairs. Every split lists pair indices
// into bundle.pairs; train and test are disjoint, cover all pairs, and are
// sorted ascending.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tiger/embedding_store.hpp"

namespace tiger {

enum class SplitKind { time, enzyme_sim, reaction_sim, random };

std::string to_string(SplitKind k);
SplitKind split_kind_from_string(const std::string& s);

struct SplitSpec {
  SplitKind kind = SplitKind::random;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  double fraction_train = 0.8;
  double threshold = 0.0;                // similarity splits
  std::optional<std::int64_t> cutoff;    // time split: last train timestamp
  std::size_t clusters = 0;              // similarity splits
};

// Summary without the index lists.
void to_json(nlohmann::json& j, const SplitSpec& s);

// Pairs ordered by enzyme timestamp; the cutoff is the timestamp of the
// ceil(fraction·n)-th pair and every pair at or before it trains.
// ConfigError when timestamps are missing; SplitInfeasibleError when the test
// side comes out empty.
SplitSpec make_time_split(const DatasetBundle& bundle, double fraction_train);

enum class SimilaritySide { enzyme, reaction };

// Single-linkage clusters of the side's items (enzyme sequence embeddings or
// molecule-mean reaction vectors) at cosine >= threshold. Whole clusters join
// the train side in seeded order until it holds at least fraction·n pairs; a
// pair follows its item. SplitInfeasibleError when either side is empty.
SplitSpec make_similarity_split(const DatasetBundle& bundle, SimilaritySide side,
                                double threshold, double fraction_train,
                                std::uint64_t seed);

// IID split over pairs: a seeded permutation, first round(fraction·n) train.
SplitSpec make_random_split(std::size_t n_pairs, double fraction_train,
                            std::uint64_t seed);

SplitSpec make_split(const DatasetBundle& bundle, SplitKind kind,
                     double fraction_train, double threshold, std::uint64_t seed);

// Cluster label per row of `x` (labels are the smallest member row).
std::vector<std::size_t> single_linkage_clusters(const Tensor& x, double threshold);

}  // namespace tiger
