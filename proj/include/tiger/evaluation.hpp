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

// Bidirectional evaluation of a checkpoint, the text-quality diagnostic and
// the ablation sweep.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tiger/checkpoint.hpp"
#include "tiger/metrics.hpp"
#include "tiger/parallel.hpp"
#include "tiger/splits.hpp"

namespace tiger {

inline constexpr int kReportSchemaVersion = 1;

struct EvalReport {
  MetricsReport e2r;
  MetricsReport r2e;
};

// Candidate pools are the unique enzymes and reactions of the test pairs.
// E2R queries every test enzyme against the reaction pool; R2E the reverse.
// Ground truth is restricted to test pairs. ConfigError for an empty test
// set or a K above a pool size; ConsistencyError when the checkpoint's input
// widths differ from the features.
EvalReport evaluate(const Checkpoint& ck, const FeatureSet& features, const PairRows& pairs,
                    const std::vector<std::size_t>& test, const std::vector<std::size_t>& ks,
                    std::size_t threads = configured_threads());

nlohmann::json eval_report_json(const EvalReport& r, const SplitSpec& split);

struct TextQuality {
  std::vector<std::size_t> bins;  // 50 uniform bins over [-1, 1]
  std::size_t n = 0;              // shared ids compared
  double threshold = 0.95;
  double fraction_below = 0.0;    // cosine strictly below threshold
  double mean_cosine = 0.0;
};

// Cosine between generated and reference rows for every shared id.
// DataError when no id is shared or a shared row has zero norm.
TextQuality text_quality_histogram(const EmbeddingTable& generated,
                                   const EmbeddingTable& reference, double threshold = 0.95);

void to_json(nlohmann::json& j, const TextQuality& t);
// Histogram as text, one bar per non-empty bin.
std::string render_histogram(const TextQuality& t);

struct AblationGrid {
  std::vector<FusionMode> fusion = {FusionMode::dgn};
  std::vector<ProjectorChoice> projector = {ProjectorChoice::ssfp};
  std::vector<double> gamma = {0.5};
};

struct AblationCell {
  FusionMode fusion;
  ProjectorChoice projector;
  double gamma;
  std::optional<EvalReport> report;  // empty when the cell failed
  std::vector<double> loss_history;
  std::string error;
};

// Trains and evaluates every cell with the same seeds and split; a cell that
// throws is recorded with its message.
std::vector<AblationCell> run_ablation(const FeatureSet& features, const PairRows& pairs,
                                       const SplitSpec& split, const Architecture& base_arch,
                                       const TrainConfig& base_train, const AblationGrid& grid,
                                       const std::vector<std::size_t>& ks);

nlohmann::json ablation_report_json(const std::vector<AblationCell>& cells,
                                    const SplitSpec& split);

}  // namespace tiger
