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

#include "tiger/trainer.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

#include "tiger/json_util.hpp"
#include "tiger/rng.hpp"

namespace tiger {

using json = nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  check_gamma(gamma);
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta1 and train.beta2 must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("train.eps must be positive");
  if (!(clip_norm >= 0.0)) throw ConfigError("train.clip_norm must be >= 0");
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"lr", c.lr},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"gamma", c.gamma},
           {"seed", c.seed},
           {"beta1", c.beta1},
           {"beta2", c.beta2},
           {"eps", c.eps},
           {"clip_norm", c.clip_norm},
           {"exclude_collisions", c.exclude_collisions}};
}

void from_json(const json& j, TrainConfig& c) {
  constexpr const char* kSection = "train";
  require_known_keys(j,
                     {"lr", "epochs", "batch_size", "gamma", "seed", "beta1", "beta2",
                      "eps", "clip_norm", "exclude_collisions"},
                     kSection);
  read_opt(j, "lr", c.lr, kSection);
  read_opt(j, "epochs", c.epochs, kSection);
  read_opt(j, "batch_size", c.batch_size, kSection);
  read_opt(j, "gamma", c.gamma, kSection);
  read_opt(j, "seed", c.seed, kSection);
  read_opt(j, "beta1", c.beta1, kSection);
  read_opt(j, "beta2", c.beta2, kSection);
  read_opt(j, "eps", c.eps, kSection);
  read_opt(j, "clip_norm", c.clip_norm, kSection);
  read_opt(j, "exclude_collisions", c.exclude_collisions, kSection);
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                   const PairRows& pairs,
                                                   std::size_t batch_size,
                                                   bool exclude_collisions) {
  std::vector<std::vector<std::size_t>> batches;
  if (!exclude_collisions) {
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
  }
  // Greedy: each batch takes the earliest remaining pairs that share neither
  // enzyme nor reaction with pairs already in it.
  std::vector<std::size_t> remaining = order;
  while (!remaining.empty()) {
    std::vector<std::size_t> batch, rest;
    std::unordered_set<std::size_t> enzymes, reactions;
    for (const std::size_t k : remaining) {
      const auto [e, r] = pairs[k];
      if (batch.size() < batch_size && !enzymes.count(e) && !reactions.count(r)) {
        batch.push_back(k);
        enzymes.insert(e);
        reactions.insert(r);
      } else {
        rest.push_back(k);
      }
    }
    batches.push_back(std::move(batch));
    remaining = std::move(rest);
  }
  return batches;
}

Checkpoint train(const FeatureSet& features, const PairRows& pairs,
                 const Architecture& arch, const TrainConfig& cfg,
                 const TrainHooks& hooks) {
  cfg.validate();
  if (pairs.empty()) throw ConfigError("training needs at least one pair");
  const bool uses_text = arch.fusion != FusionMode::seq_only;

  Checkpoint ck;
  ck.train = cfg;
  ck.params = init_model(features.dims, arch, cfg.seed);

  CounterRng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  AdamState adam;
  const AdamConfig adam_cfg = cfg.adam();
  std::vector<std::size_t> order(pairs.size());
  bool warned_singleton = false;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : make_batches(order, pairs, cfg.batch_size, cfg.exclude_collisions)) {
      if (batch.size() == 1 && !warned_singleton) {
        warned_singleton = true;
        if (hooks.on_warning) {
          hooks.on_warning("a training batch holds a single pair; its loss is ln 1 = 0");
        }
      }
      std::vector<std::size_t> e_rows, r_rows;
      for (const std::size_t k : batch) {
        e_rows.push_back(pairs[k].first);
        r_rows.push_back(pairs[k].second);
      }
      const Tensor seq = take_rows(features.seq, e_rows);
      const Tensor text = uses_text ? take_rows(features.text, e_rows) : Tensor();
      const Tensor rxn = take_rows(features.rxn, r_rows);

      Tape<float> tape;
      Binder<float> binder(tape, true);
      binder.bind_all(ck.params);
      const Var<float> loss = batch_loss(binder, ck.params, seq, text, rxn, cfg.gamma);
      GradMap<float> grads = tape.backward(loss);
      if (cfg.clip_norm > 0.0) clip_global_norm(grads, cfg.clip_norm);
      adam_step(ck.params, grads, adam, adam_cfg);

      const double tau = ck.params.tau();
      if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw NumericError("temperature left (0, inf) after step " + std::to_string(adam.step));
      }
      loss_sum += static_cast<double>(loss.value().item()) * static_cast<double>(batch.size());
      seen += batch.size();
    }
    const double mean = loss_sum / static_cast<double>(seen);
    ck.loss_history.push_back(mean);
    if (hooks.on_epoch) hooks.on_epoch(epoch + 1, mean);
  }
  return ck;
}

Checkpoint train(const DatasetBundle& bundle, const Architecture& arch,
                 const TrainConfig& cfg, const TrainHooks& hooks) {
  const FeatureSet features = build_features(bundle);
  return train(features, pair_rows(bundle, features), arch, cfg, hooks);
}

}  // namespace tiger
