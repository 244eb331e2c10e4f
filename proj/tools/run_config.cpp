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

#include "run_config.hpp"

#include "tiger/io.hpp"
#include "tiger/json_util.hpp"

namespace tiger::cli {

using json = nlohmann::json;

namespace {

void parse_eval(const json& j, EvalSettings& e) {
  require_known_keys(j, {"fraction_train", "threshold", "ks"}, "eval");
  read_opt(j, "fraction_train", e.fraction_train, "eval");
  read_opt(j, "threshold", e.threshold, "eval");
  read_opt(j, "ks", e.ks, "eval");
}

template <class E, class Parse>
std::vector<E> parse_enum_list(const json& j, const char* key, Parse parse) {
  std::vector<std::string> names;
  read_opt(j, key, names, "ablation");
  if (names.empty()) throw ConfigError(std::string("ablation.") + key + " must not be empty");
  std::vector<E> out;
  for (const auto& n : names) out.push_back(parse(n));
  return out;
}

void parse_ablation(const json& j, AblationGrid& g) {
  require_known_keys(j, {"fusion", "projector", "gamma"}, "ablation");
  if (j.contains("fusion")) {
    g.fusion = parse_enum_list<FusionMode>(j, "fusion", fusion_mode_from_string);
  }
  if (j.contains("projector")) {
    g.projector = parse_enum_list<ProjectorChoice>(j, "projector", projector_from_string);
  }
  if (j.contains("gamma")) {
    read_opt(j, "gamma", g.gamma, "ablation");
    if (g.gamma.empty()) throw ConfigError("ablation.gamma must not be empty");
    for (const double v : g.gamma) check_gamma(v);
  }
}

}  // namespace

void to_json(json& j, const RunConfig& c) {
  json fusion = json::array(), projector = json::array();
  for (const auto f : c.ablation.fusion) fusion.push_back(to_string(f));
  for (const auto p : c.ablation.projector) projector.push_back(to_string(p));
  j = json{{"schema_version", kRunConfigSchema},
           {"data", c.data},
           {"model", c.model},
           {"train", c.train},
           {"eval",
            {{"fraction_train", c.eval.fraction_train},
             {"threshold", c.eval.threshold},
             {"ks", c.eval.ks}}},
           {"ablation", {{"fusion", fusion}, {"projector", projector}, {"gamma", c.ablation.gamma}}}};
}

RunConfig parse_run_config(const json& j) {
  require_known_keys(j, {"schema_version", "data", "model", "train", "eval", "ablation"},
                     "config");
  int version = kRunConfigSchema;
  read_opt(j, "schema_version", version, "config");
  if (version != kRunConfigSchema) {
    throw ConfigError("unsupported config schema_version " + std::to_string(version));
  }
  RunConfig c;
  try {
    if (j.contains("data")) c.data = j.at("data").get<SyntheticConfig>();
    if (j.contains("model")) c.model = j.at("model").get<Architecture>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (j.contains("eval")) parse_eval(j.at("eval"), c.eval);
  if (j.contains("ablation")) parse_ablation(j.at("ablation"), c.ablation);
  c.data.validate();
  c.model.validate();
  c.train.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(j);
}

}  // namespace tiger::cli
