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

// Mini-batch contrastive training with in-batch negatives.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tiger/adam.hpp"
#include "tiger/model.hpp"

namespace tiger {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double gamma = 0.5;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
  // Keep any enzyme or reaction from appearing twice in one batch; colliding
  // pairs wait for a later batch.
  bool exclude_collisions = false;

  void validate() const;
  AdamConfig adam() const { return {lr, beta1, beta2, eps}; }
};

void to_json(nlohmann::json& j, const TrainConfig& c);
// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, TrainConfig& c);

struct Checkpoint {
  ModelParams<float> params;
  TrainConfig train;
  std::vector<double> loss_history;  // mean training loss per epoch
  nlohmann::json meta = nlohmann::json::object();  // free-form run context
};

struct TrainHooks {
  std::function<void(std::size_t epoch, double mean_loss)> on_epoch;
  std::function<void(const std::string&)> on_warning;
};

using PairRows = std::vector<std::pair<std::size_t, std::size_t>>;

// Batches of pair positions for one epoch, given that epoch's shuffled order.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                   const PairRows& pairs,
                                                   std::size_t batch_size,
                                                   bool exclude_collisions);

// Trains on `pairs` (rows into `features`). Parameters are initialised from
// derive_seed(cfg.seed, "init") and batches shuffled from
// derive_seed(cfg.seed, "shuffle"). The result is a pure function of the
// inputs. ConfigError for empty pairs or invalid settings.
Checkpoint train(const FeatureSet& features, const PairRows& pairs,
                 const Architecture& arch, const TrainConfig& cfg,
                 const TrainHooks& hooks = {});

// Convenience: all pairs of the bundle.
Checkpoint train(const DatasetBundle& bundle, const Architecture& arch,
                 const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace tiger
