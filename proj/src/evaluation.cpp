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

#include "tiger/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <cstdio>
#include <sstream>

namespace tiger {

using json = nlohmann::json;

EvalReport evaluate(const Checkpoint& ck, const FeatureSet& features, const PairRows& pairs,
                    const std::vector<std::size_t>& test, const std::vector<std::size_t>& ks,
                    std::size_t threads) {
  if (test.empty()) throw ConfigError("evaluation needs a non-empty test split");
  const InputDims& want = ck.params.dims;
  const InputDims& have = features.dims;
  const bool text_needed = ck.params.arch.fusion != FusionMode::seq_only;
  if (want.seq_dim != have.seq_dim || want.mol_dim != have.mol_dim ||
      (text_needed && want.text_dim != have.text_dim)) {
    throw ConsistencyError("checkpoint expects widths seq " + std::to_string(want.seq_dim) +
                           " text " + std::to_string(want.text_dim) + " mol " +
                           std::to_string(want.mol_dim) + ", data has seq " +
                           std::to_string(have.seq_dim) + " text " +
                           std::to_string(have.text_dim) + " mol " +
                           std::to_string(have.mol_dim));
  }

  // Unique test items in ascending row order; std::map gives the pool index.
  std::map<std::size_t, std::size_t> e_pos, r_pos;
  for (const std::size_t k : test) {
    if (k >= pairs.size()) throw ContractError("test index outside the pair list");
    e_pos.emplace(pairs[k].first, 0);
    r_pos.emplace(pairs[k].second, 0);
  }
  std::vector<std::size_t> e_rows, r_rows;
  for (auto& [row, pos] : e_pos) {
    pos = e_rows.size();
    e_rows.push_back(row);
  }
  for (auto& [row, pos] : r_pos) {
    pos = r_rows.size();
    r_rows.push_back(row);
  }
  std::vector<std::vector<std::size_t>> gt_e2r(e_rows.size()), gt_r2e(r_rows.size());
  for (const std::size_t k : test) {
    const std::size_t e = e_pos.at(pairs[k].first), r = r_pos.at(pairs[k].second);
    gt_e2r[e].push_back(r);
    gt_r2e[r].push_back(e);
  }

  const Tensor text = text_needed ? take_rows(features.text, e_rows) : Tensor();
  const Tensor emb_e = embed_enzymes(ck.params, take_rows(features.seq, e_rows), text);
  const Tensor emb_r = embed_reactions(ck.params, take_rows(features.rxn, r_rows));
  const Tensor s = similarity_matrix(emb_e, emb_r, ck.params.tau());
  Tensor st = Tensor::matrix(s.cols(), s.rows());
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) st(j, i) = s(i, j);

  const std::size_t top_k = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());
  EvalReport out;
  out.e2r = compute_metrics(rank_queries(s, gt_e2r, top_k, Direction::e2r, threads), ks);
  out.r2e = compute_metrics(rank_queries(st, gt_r2e, top_k, Direction::r2e, threads), ks);
  return out;
}

json eval_report_json(const EvalReport& r, const SplitSpec& split) {
  return json{{"schema_version", kReportSchemaVersion},
              {"split", split},
              {"e2r", r.e2r},
              {"r2e", r.r2e}};
}

TextQuality text_quality_histogram(const EmbeddingTable& generated,
                                   const EmbeddingTable& reference, double threshold) {
  if (generated.dim() != reference.dim()) {
    throw ConsistencyError("text diagnostic: widths differ (" + std::to_string(generated.dim()) +
                           " vs " + std::to_string(reference.dim()) + ")");
  }
  constexpr std::size_t kBins = 50;
  TextQuality tq;
  tq.bins.assign(kBins, 0);
  tq.threshold = threshold;
  std::size_t below = 0;
  double cos_sum = 0.0;
  for (std::size_t i = 0; i < generated.rows(); ++i) {
    const std::string& id = generated.ids()[i];
    const auto j = reference.find(id);
    if (!j) continue;
    const auto a = generated.row(i);
    const auto b = reference.row(*j);
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      ab += static_cast<double>(a[k]) * b[k];
      aa += static_cast<double>(a[k]) * a[k];
      bb += static_cast<double>(b[k]) * b[k];
    }
    if (aa == 0.0 || bb == 0.0) throw DataError("text diagnostic: zero vector for id '" + id + "'");
    const double c = std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
    const auto bin = std::min<std::size_t>(kBins - 1, static_cast<std::size_t>((c + 1.0) / 2.0 * kBins));
    ++tq.bins[bin];
    below += c < threshold ? 1 : 0;
    cos_sum += c;
    ++tq.n;
  }
  if (tq.n == 0) throw DataError("text diagnostic: the two tables share no ids");
  tq.fraction_below = static_cast<double>(below) / static_cast<double>(tq.n);
  tq.mean_cosine = cos_sum / static_cast<double>(tq.n);
  return tq;
}

void to_json(json& j, const TextQuality& t) {
  j = json{{"schema_version", kReportSchemaVersion},
           {"bins", t.bins},
           {"bin_range", {-1.0, 1.0}},
           {"n", t.n},
           {"threshold", t.threshold},
           {"fraction_below", t.fraction_below},
           {"mean_cosine", t.mean_cosine}};
}

std::string render_histogram(const TextQuality& t) {
  std::ostringstream os;
  const std::size_t peak = *std::max_element(t.bins.begin(), t.bins.end());
  const double width = 2.0 / static_cast<double>(t.bins.size());
  char label[48];
  for (std::size_t i = 0; i < t.bins.size(); ++i) {
    if (t.bins[i] == 0) continue;
    const double lo = -1.0 + width * static_cast<double>(i);
    std::snprintf(label, sizeof label, "[%+.2f, %+.2f) %6zu ", lo, lo + width, t.bins[i]);
    os << label << std::string((t.bins[i] * 50 + peak - 1) / peak, '#') << '\n';
  }
  std::snprintf(label, sizeof label, "%.4f", t.fraction_below);
  os << "fraction below " << t.threshold << ": " << label << " of " << t.n << '\n';
  return os.str();
}

std::vector<AblationCell> run_ablation(const FeatureSet& features, const PairRows& pairs,
                                       const SplitSpec& split, const Architecture& base_arch,
                                       const TrainConfig& base_train, const AblationGrid& grid,
                                       const std::vector<std::size_t>& ks) {
  PairRows train_pairs;
  for (const std::size_t k : split.train) train_pairs.push_back(pairs[k]);
  std::vector<AblationCell> cells;
  for (const FusionMode f : grid.fusion) {
    for (const ProjectorChoice p : grid.projector) {
      for (const double g : grid.gamma) {
        AblationCell cell{f, p, g, std::nullopt, {}, {}};
        try {
          Architecture arch = base_arch;
          arch.fusion = f;
          arch.projector = p;
          TrainConfig cfg = base_train;
          cfg.gamma = g;
          const Checkpoint ck = train(features, train_pairs, arch, cfg);
          cell.loss_history = ck.loss_history;
          cell.report = evaluate(ck, features, pairs, split.test, ks);
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

json ablation_report_json(const std::vector<AblationCell>& cells, const SplitSpec& split) {
  json rows = json::array();
  for (const AblationCell& c : cells) {
    json row{{"fusion", to_string(c.fusion)},
             {"projector", to_string(c.projector)},
             {"gamma", c.gamma},
             {"ok", c.report.has_value()}};
    if (c.report) {
      row["e2r"] = c.report->e2r;
      row["r2e"] = c.report->r2e;
      row["loss_history"] = c.loss_history;
    } else {
      row["error"] = c.error;
    }
    rows.push_back(std::move(row));
  }
  return json{{"schema_version", kReportSchemaVersion}, {"split", split}, {"cells", rows}};
}

}  // namespace tiger
