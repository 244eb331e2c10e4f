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

// Run configuration document shared by every command:
//   {"schema_version": 1, "data": {...}, "model": {...}, "train": {...},
//    "eval": {...}, "ablation": {...}}
// Every section is optional; unknown keys anywhere are rejected.

#include <cstddef>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "tiger/evaluation.hpp"
#include "tiger/synthetic.hpp"

namespace tiger::cli {

inline constexpr int kRunConfigSchema = 1;

struct EvalSettings {
  double fraction_train = 0.8;
  double threshold = 0.9;  // cosine, similarity splits
  std::vector<std::size_t> ks = default_ks();
};

struct RunConfig {
  SyntheticConfig data;
  Architecture model;
  TrainConfig train;
  EvalSettings eval;
  AblationGrid ablation;
};

void to_json(nlohmann::json& j, const RunConfig& c);
// ConfigError on unknown keys, bad types or an unsupported schema_version.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace tiger::cli
