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

#include "tiger/splits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "tiger/reaction_encoder.hpp"
#include "tiger/rng.hpp"

namespace tiger {

std::string to_string(SplitKind k) {
  switch (k) {
    case SplitKind::time: return "time";
    case SplitKind::enzyme_sim: return "enzyme_sim";
    case SplitKind::reaction_sim: return "reaction_sim";
    case SplitKind::random: return "random";
  }
  return "unknown";
}

SplitKind split_kind_from_string(const std::string& s) {
  if (s == "time") return SplitKind::time;
  if (s == "enzyme_sim") return SplitKind::enzyme_sim;
  if (s == "reaction_sim") return SplitKind::reaction_sim;
  if (s == "random") return SplitKind::random;
  throw ConfigError("unknown split '" + s + "' (expected time|enzyme_sim|reaction_sim|random)");
}

void to_json(nlohmann::json& j, const SplitSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)},
                     {"fraction_train", s.fraction_train},
                     {"n_train", s.train.size()},
                     {"n_test", s.test.size()}};
  if (s.kind == SplitKind::enzyme_sim || s.kind == SplitKind::reaction_sim) {
    j["threshold"] = s.threshold;
    j["clusters"] = s.clusters;
  }
  if (s.cutoff) j["cutoff_timestamp"] = *s.cutoff;
}

namespace {

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) {
    throw ConfigError("fraction_train must lie in (0, 1), got " + std::to_string(f));
  }
}

std::size_t train_target(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;  // the root stays the smallest index
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<std::size_t> single_linkage_clusters(const Tensor& x, double threshold) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> unit(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (std::size_t k = 0; k < d; ++k) ss += static_cast<double>(x(i, k)) * x(i, k);
    const double norm = std::sqrt(ss);
    if (!(norm >= 1e-12)) {
      throw DomainError("similarity split: row " + std::to_string(i) + " has zero norm");
    }
    for (std::size_t k = 0; k < d; ++k) unit[i * d + k] = x(i, k) / norm;
  }
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < d; ++k) c += unit[i * d + k] * unit[j * d + k];
      if (c >= threshold) uf.unite(i, j);
    }
  }
  std::vector<std::size_t> label(n);
  for (std::size_t i = 0; i < n; ++i) label[i] = uf.find(i);
  return label;
}

SplitSpec make_time_split(const DatasetBundle& bundle, double fraction_train) {
  check_fraction(fraction_train);
  if (!bundle.enzyme_timestamps) throw ConfigError("time split needs enzyme timestamps");
  const Timestamps& ts = *bundle.enzyme_timestamps;
  const std::size_t n = bundle.pairs.size();
  std::vector<std::int64_t> when(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = ts.find(bundle.pairs.pairs[i].first);
    if (it == ts.end()) {
      throw ConfigError("time split: enzyme '" + bundle.pairs.pairs[i].first +
                        "' has no timestamp");
    }
    when[i] = it->second;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return when[a] < when[b]; });

  SplitSpec s;
  s.kind = SplitKind::time;
  s.fraction_train = fraction_train;
  const std::size_t k = std::max<std::size_t>(1, train_target(fraction_train, n));
  s.cutoff = when[order[std::min(k, n) - 1]];
  for (std::size_t i = 0; i < n; ++i) (when[i] <= *s.cutoff ? s.train : s.test).push_back(i);
  if (s.test.empty()) {
    throw SplitInfeasibleError("time split leaves no test pairs: every timestamp is at or "
                               "before the cutoff; lower fraction_train or add later pairs");
  }
  return s;
}

SplitSpec make_similarity_split(const DatasetBundle& bundle, SimilaritySide side,
                                double threshold, double fraction_train, std::uint64_t seed) {
  check_fraction(fraction_train);
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("similarity threshold must lie in (0, 1)");
  }
  const std::size_t n = bundle.pairs.size();
  // Item row per pair, on the chosen side.
  std::vector<std::size_t> item_of_pair(n);
  Tensor items;
  if (side == SimilaritySide::enzyme) {
    for (std::size_t i = 0; i < n; ++i) {
      item_of_pair[i] = bundle.enzyme_seq.index_of(bundle.pairs.pairs[i].first);
    }
    items = bundle.enzyme_seq.matrix();
  } else {
    std::unordered_map<std::string, std::size_t> row;
    for (std::size_t r = 0; r < bundle.reactions.size(); ++r) {
      row.emplace(bundle.reactions[r].reaction_id, r);
    }
    for (std::size_t i = 0; i < n; ++i) item_of_pair[i] = row.at(bundle.pairs.pairs[i].second);
    items = aggregate_all(bundle).matrix();
  }
  const std::vector<std::size_t> label = single_linkage_clusters(items, threshold);

  // Pairs grouped by cluster; clusters keyed by smallest member, then shuffled.
  std::map<std::size_t, std::vector<std::size_t>> by_cluster;
  for (std::size_t i = 0; i < n; ++i) by_cluster[label[item_of_pair[i]]].push_back(i);
  std::vector<const std::vector<std::size_t>*> clusters;
  for (const auto& [root, members] : by_cluster) clusters.push_back(&members);
  CounterRng rng(derive_seed(seed, "split"));
  rng.shuffle(clusters.begin(), clusters.end());

  SplitSpec s;
  s.kind = side == SimilaritySide::enzyme ? SplitKind::enzyme_sim : SplitKind::reaction_sim;
  s.fraction_train = fraction_train;
  s.threshold = threshold;
  s.clusters = clusters.size();
  const std::size_t target = train_target(fraction_train, n);
  for (const auto* members : clusters) {
    auto& dst = s.train.size() < target ? s.train : s.test;
    dst.insert(dst.end(), members->begin(), members->end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  if (s.test.empty() || s.train.empty()) {
    throw SplitInfeasibleError(
        "similarity split at threshold " + std::to_string(threshold) + " produced " +
        std::to_string(clusters.size()) + " cluster(s) and cannot fill both sides; "
        "try a higher threshold");
  }
  return s;
}

SplitSpec make_random_split(std::size_t n_pairs, double fraction_train, std::uint64_t seed) {
  check_fraction(fraction_train);
  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(derive_seed(seed, "split"));
  rng.shuffle(order.begin(), order.end());
  const auto k = static_cast<std::size_t>(
      std::llround(fraction_train * static_cast<double>(n_pairs)));
  SplitSpec s;
  s.kind = SplitKind::random;
  s.fraction_train = fraction_train;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  if (s.train.empty() || s.test.empty()) {
    throw SplitInfeasibleError("random split of " + std::to_string(n_pairs) +
                               " pairs leaves one side empty");
  }
  return s;
}

SplitSpec make_split(const DatasetBundle& bundle, SplitKind kind, double fraction_train,
                     double threshold, std::uint64_t seed) {
  switch (kind) {
    case SplitKind::time: return make_time_split(bundle, fraction_train);
    case SplitKind::enzyme_sim:
      return make_similarity_split(bundle, SimilaritySide::enzyme, threshold, fraction_train, seed);
    case SplitKind::reaction_sim:
      return make_similarity_split(bundle, SimilaritySide::reaction, threshold, fraction_train,
                                   seed);
    case SplitKind::random: return make_random_split(bundle.pairs.size(), fraction_train, seed);
  }
  throw ConfigError("unknown split kind");
}

}  // namespace tiger
