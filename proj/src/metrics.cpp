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

#include "tiger/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tiger/parallel.hpp"

namespace tiger {

std::string to_string(Direction d) { return d == Direction::e2r ? "E2R" : "R2E"; }

RankResult rank_queries(const Tensor& scores, const std::vector<std::vector<std::size_t>>& gt,
                        std::size_t top_k, Direction direction, std::size_t threads) {
  const std::size_t q_count = scores.rows(), c_count = scores.cols();
  if (gt.size() != q_count) {
    throw ContractError("rank_queries: " + std::to_string(gt.size()) +
                        " ground-truth sets for " + std::to_string(q_count) + " queries");
  }
  RankResult rr;
  rr.direction = direction;
  rr.pool_size = c_count;
  rr.queries.resize(q_count);
  const std::size_t keep = std::min(top_k, c_count);

  parallel_for(
      q_count,
      [&](std::size_t q) {
        const auto row = scores.row(q);
        for (const float v : row) {
          if (!std::isfinite(v)) {
            throw ContractError("rank_queries: non-finite score in query " + std::to_string(q));
          }
        }
        QueryRank& out = rr.queries[q];
        out.ground_truth = gt[q];
        std::sort(out.ground_truth.begin(), out.ground_truth.end());
        out.ground_truth.erase(std::unique(out.ground_truth.begin(), out.ground_truth.end()),
                               out.ground_truth.end());
        if (out.ground_truth.empty()) {
          throw ContractError("rank_queries: query " + std::to_string(q) +
                              " has no ground truth");
        }
        if (out.ground_truth.back() >= c_count) {
          throw ContractError("rank_queries: query " + std::to_string(q) +
                              " has a ground-truth index outside the pool");
        }
        // a precedes b in the ranking.
        auto before = [&](std::size_t a, std::size_t b) {
          return row[a] > row[b] || (row[a] == row[b] && a < b);
        };
        std::size_t best = out.ground_truth.front();
        for (const std::size_t g : out.ground_truth)
          if (before(g, best)) best = g;
        std::size_t ahead = 0;
        for (std::size_t c = 0; c < c_count; ++c) ahead += before(c, best) ? 1 : 0;
        out.rank = ahead + 1;

        std::vector<std::size_t> idx(c_count);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                          before);
        out.top.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
      },
      threads);
  return rr;
}

MetricsReport compute_metrics(const RankResult& rr, const std::vector<std::size_t>& ks) {
  MetricsReport m;
  m.direction = rr.direction;
  m.pool_size = rr.pool_size;
  m.n_queries = rr.queries.size();
  m.ks = ks;
  if (rr.queries.empty()) throw ContractError("compute_metrics: no queries");
  for (const std::size_t k : ks) {
    if (k == 0 || k > rr.pool_size) {
      throw ConfigError("K = " + std::to_string(k) + " is outside [1, pool size " +
                        std::to_string(rr.pool_size) + "]");
    }
  }
  const double nq = static_cast<double>(rr.queries.size());
  for (const std::size_t k : ks) {
    double hits = 0.0, prec = 0.0;
    for (const QueryRank& q : rr.queries) {
      if (q.top.size() < k) {
        throw ContractError("compute_metrics: only " + std::to_string(q.top.size()) +
                            " retrieved candidates kept, K = " + std::to_string(k));
      }
      if (q.rank <= k) hits += 1.0;
      std::size_t found = 0;
      for (std::size_t i = 0; i < k; ++i) {
        found += std::binary_search(q.ground_truth.begin(), q.ground_truth.end(), q.top[i]) ? 1 : 0;
      }
      prec += static_cast<double>(found) / static_cast<double>(k);
    }
    m.hit.push_back(hits / nq);
    m.precision.push_back(prec / nq);
  }
  double rr_sum = 0.0, rank_sum = 0.0;
  for (const QueryRank& q : rr.queries) {
    rr_sum += 1.0 / static_cast<double>(q.rank);
    rank_sum += static_cast<double>(q.rank);
  }
  m.mrr = rr_sum / nq;
  m.mean_rank = rank_sum / nq;
  return m;
}

void to_json(nlohmann::json& j, const MetricsReport& m) {
  nlohmann::json hit = nlohmann::json::object(), prec = nlohmann::json::object();
  for (std::size_t i = 0; i < m.ks.size(); ++i) {
    hit[std::to_string(m.ks[i])] = m.hit[i];
    prec[std::to_string(m.ks[i])] = m.precision[i];
  }
  j = nlohmann::json{{"direction", to_string(m.direction)},
                     {"pool_size", m.pool_size},
                     {"n_queries", m.n_queries},
                     {"hit", hit},
                     {"precision", prec},
                     {"mrr", m.mrr},
                     {"mean_rank", m.mean_rank}};
}

}  // namespace tiger
