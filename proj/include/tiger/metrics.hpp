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

// Ranking and retrieval metrics.
//
// Candidates are ordered by descending score, ties by ascending candidate
// index. A query's rank is that of its best-placed ground truth.
//   H@K  = fraction of queries with rank <= K
//   P@K  = mean over queries of |top-K ∩ GT| / K
//   MRR  = mean of 1 / rank
//   MR   = mean rank

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tiger/tensor.hpp"

namespace tiger {

enum class Direction { e2r, r2e };

std::string to_string(Direction d);

struct QueryRank {
  std::size_t rank = 0;                // 1-based
  std::vector<std::size_t> ground_truth;  // sorted candidate indices
  std::vector<std::size_t> top;           // best candidates first
};

struct RankResult {
  Direction direction = Direction::e2r;
  std::size_t pool_size = 0;
  std::vector<QueryRank> queries;
};

// scores is Q×C; gt[q] lists candidate indices (duplicates ignored). Keeps the
// `top_k` best candidates per query (capped at C). ContractError for an empty
// or out-of-range ground-truth set or a non-finite score. Rows are ranked in
// parallel according to `threads`.
RankResult rank_queries(const Tensor& scores,
                        const std::vector<std::vector<std::size_t>>& gt,
                        std::size_t top_k, Direction direction = Direction::e2r,
                        std::size_t threads = 0);

inline const std::vector<std::size_t>& default_ks() {
  static const std::vector<std::size_t> ks = {1, 2, 3, 4, 5, 10, 20};
  return ks;
}

struct MetricsReport {
  Direction direction = Direction::e2r;
  std::size_t pool_size = 0;
  std::size_t n_queries = 0;
  std::vector<std::size_t> ks;
  std::vector<double> hit;        // aligned with ks
  std::vector<double> precision;  // aligned with ks
  double mrr = 0.0;
  double mean_rank = 0.0;
};

// ConfigError when a K is zero or exceeds the pool; ContractError when a K
// exceeds the retained top list.
MetricsReport compute_metrics(const RankResult& rr, const std::vector<std::size_t>& ks);

void to_json(nlohmann::json& j, const MetricsReport& m);

}  // namespace tiger
