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

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "run_config.hpp"
#include "tiger/io.hpp"

namespace tiger::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::string ckpt;
  std::string split;
  std::string ks;
  std::string generated;
  std::string reference;
  std::optional<double> threshold;
  bool pretty = false;
};

RunConfig config_or_default(const Options& o) {
  return o.config.empty() ? RunConfig{} : load_run_config(o.config);
}

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      ks.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("--ks expects positive integers separated by commas, got '" + text + "'");
    }
  }
  if (ks.empty()) throw ConfigError("--ks must list at least one K");
  return ks;
}

void write_report(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, j.dump(2) + "\n");
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string metrics_row(const std::string& label, const MetricsReport& m) {
  std::string row = label;
  row.resize(24, ' ');
  row += fmt(static_cast<double>(m.pool_size), "%6.0f");
  for (const double h : m.hit) row += "  " + fmt(h);
  row += "  " + fmt(m.mrr) + "  " + fmt(m.mean_rank, "%8.2f");
  return row;
}

std::string metrics_header(const std::vector<std::size_t>& ks) {
  std::string row = "run";
  row.resize(24, ' ');
  row += "  pool";
  for (const std::size_t k : ks) {
    std::string h = "H@" + std::to_string(k);
    h.resize(6, ' ');
    row += "  " + h;
  }
  row += "  MRR     MeanRank";
  return row;
}

// ---- commands ------------------------------------------------------------------

int cmd_gen(const Options& o, std::ostream& out) {
  const RunConfig cfg = config_or_default(o);
  const std::uint64_t seed = o.seed.value_or(cfg.train.seed);
  const SyntheticDataset ds = generate_synthetic_dataset(cfg.data, seed);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_dataset_dir(ds.bundle, dir);
  if (ds.text_reference) {
    write_embedding_table(*ds.text_reference,
                          DatasetLayout::binary(dir, DatasetLayout::kEnzymeTextReference),
                          DatasetLayout::manifest(dir, DatasetLayout::kEnzymeTextReference));
  }
  out << json{{"enzymes", ds.bundle.enzyme_seq.rows()},
              {"reactions", ds.bundle.reactions.size()},
              {"molecules", ds.bundle.molecules.rows()},
              {"pairs", ds.bundle.pairs.size()},
              {"seed", seed},
              {"out", dir.string()}}
             .dump()
      << "\n";
  return kOk;
}

struct Prepared {
  RunConfig cfg;
  DatasetBundle bundle;
  FeatureSet features;
  PairRows pairs;
  SplitSpec split;
  std::uint64_t seed = 0;
};

Prepared prepare(const Options& o, const RunConfig& cfg, SplitKind kind, std::uint64_t seed) {
  Prepared p;
  p.cfg = cfg;
  p.seed = seed;
  p.bundle = load_dataset_dir(o.data);
  p.features = build_features(p.bundle);
  p.pairs = pair_rows(p.bundle, p.features);
  p.split = make_split(p.bundle, kind, cfg.eval.fraction_train, cfg.eval.threshold, seed);
  return p;
}

json split_meta(const Prepared& p) {
  return json{{"kind", to_string(p.split.kind)},
              {"fraction_train", p.cfg.eval.fraction_train},
              {"threshold", p.cfg.eval.threshold},
              {"seed", p.seed}};
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig cfg = config_or_default(o);
  const std::uint64_t seed = o.seed.value_or(cfg.train.seed);
  cfg.train.seed = seed;
  const Prepared p = prepare(o, cfg, split_kind_from_string(o.split), seed);
  PairRows train_pairs;
  for (const std::size_t k : p.split.train) train_pairs.push_back(p.pairs[k]);
  TrainHooks hooks;
  hooks.on_epoch = [&out](std::size_t epoch, double loss) {
    out << json{{"epoch", epoch}, {"loss", loss}}.dump() << "\n";
  };
  hooks.on_warning = [&err](const std::string& msg) { err << "warning: " << msg << "\n"; };
  Checkpoint ck = train(p.features, train_pairs, cfg.model, cfg.train, hooks);
  ck.meta = json{{"split", split_meta(p)}};
  const fs::path path(o.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_checkpoint(ck, path);
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.ckpt);
  const json meta = ck.meta.value("split", json::object());
  RunConfig cfg = config_or_default(o);
  if (o.config.empty()) {
    cfg.eval.fraction_train = meta.value("fraction_train", cfg.eval.fraction_train);
    cfg.eval.threshold = meta.value("threshold", cfg.eval.threshold);
  }
  const std::uint64_t seed = o.seed.value_or(meta.value("seed", ck.train.seed));
  const std::string kind = o.split.empty() ? meta.value("kind", std::string("random")) : o.split;
  const std::vector<std::size_t> ks = o.ks.empty() ? cfg.eval.ks : parse_ks(o.ks);
  const Prepared p = prepare(o, cfg, split_kind_from_string(kind), seed);
  const EvalReport report = evaluate(ck, p.features, p.pairs, p.split.test, ks);
  write_report(o.out, eval_report_json(report, p.split));
  if (o.pretty) {
    out << metrics_header(ks) << "\n"
        << metrics_row("E2R", report.e2r) << "\n"
        << metrics_row("R2E", report.r2e) << "\n";
  }
  return kOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  RunConfig cfg = config_or_default(o);
  const std::uint64_t seed = o.seed.value_or(cfg.train.seed);
  cfg.train.seed = seed;
  const std::vector<std::size_t> ks = o.ks.empty() ? cfg.eval.ks : parse_ks(o.ks);
  const Prepared p = prepare(o, cfg, split_kind_from_string(o.split), seed);
  const auto cells =
      run_ablation(p.features, p.pairs, p.split, cfg.model, cfg.train, cfg.ablation, ks);
  write_report(o.out, ablation_report_json(cells, p.split));
  std::size_t ok = 0;
  for (const auto& c : cells) ok += c.report ? 1 : 0;
  if (o.pretty) {
    out << metrics_header(ks) << "\n";
    for (const auto& c : cells) {
      const std::string label =
          to_string(c.fusion) + "/" + to_string(c.projector) + "/g=" + fmt(c.gamma, "%.2f");
      if (!c.report) {
        out << label << "  FAILED: " << c.error << "\n";
        continue;
      }
      out << metrics_row(label + " E2R", c.report->e2r) << "\n"
          << metrics_row(label + " R2E", c.report->r2e) << "\n";
    }
  }
  return ok == 0 ? kAblationFailed : kOk;
}

int cmd_diag_text(const Options& o, std::ostream& out) {
  fs::path gen_bin, ref_bin;
  if (!o.data.empty()) {
    gen_bin = DatasetLayout::binary(o.data, DatasetLayout::kEnzymeText);
    ref_bin = DatasetLayout::binary(o.data, DatasetLayout::kEnzymeTextReference);
  }
  if (!o.generated.empty()) gen_bin = o.generated;
  if (!o.reference.empty()) ref_bin = o.reference;
  if (gen_bin.empty() || ref_bin.empty()) {
    throw ConfigError("diag-text needs --data or both --generated and --reference");
  }
  const EmbeddingTable gen = load_embedding_table(gen_bin, manifest_for(gen_bin));
  const EmbeddingTable ref = load_embedding_table(ref_bin, manifest_for(ref_bin));
  const TextQuality tq = text_quality_histogram(gen, ref, o.threshold.value_or(0.95));
  const json j = tq;
  if (!o.out.empty()) write_report(o.out, j);
  if (o.pretty) {
    out << render_histogram(tq);
  } else if (o.out.empty()) {
    out << j.dump() << "\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Enzyme-reaction retrieval: data generation, training, evaluation"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset directory");
  gen->add_option("--config", o.config, "Run config JSON")->check(CLI::ExistingFile);
  gen->add_option("--seed", o.seed, "Run seed");
  gen->add_option("--out", o.out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Train on the train side of a split");
  tr->add_option("--data", o.data, "Dataset directory")->required();
  tr->add_option("--config", o.config, "Run config JSON")->check(CLI::ExistingFile);
  tr->add_option("--split", o.split, "time|enzyme_sim|reaction_sim|random")->required();
  tr->add_option("--seed", o.seed, "Run seed (overrides train.seed)");
  tr->add_option("--out", o.out, "Checkpoint path")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test side of its split");
  ev->add_option("--data", o.data, "Dataset directory")->required();
  ev->add_option("--ckpt", o.ckpt, "Checkpoint path")->required();
  ev->add_option("--config", o.config, "Run config JSON (default: settings saved in the checkpoint)")
      ->check(CLI::ExistingFile);
  ev->add_option("--split", o.split, "time|enzyme_sim|reaction_sim|random (default: checkpoint's)");
  ev->add_option("--seed", o.seed, "Split seed (default: checkpoint's)");
  ev->add_option("--ks", o.ks, "Comma-separated K list, e.g. 1,2,3,4,5,10,20");
  ev->add_option("--out", o.out, "Report JSON path")->required();
  ev->add_flag("--pretty", o.pretty, "Print an ASCII table");

  auto* ab = app.add_subcommand("ablate", "Train and evaluate every cell of the ablation grid");
  ab->add_option("--data", o.data, "Dataset directory")->required();
  ab->add_option("--config", o.config, "Run config JSON")->check(CLI::ExistingFile);
  ab->add_option("--split", o.split, "time|enzyme_sim|reaction_sim|random")->required();
  ab->add_option("--seed", o.seed, "Run seed (overrides train.seed)");
  ab->add_option("--ks", o.ks, "Comma-separated K list");
  ab->add_option("--out", o.out, "Report JSON path")->required();
  ab->add_flag("--pretty", o.pretty, "Print an ASCII table");

  auto* dt = app.add_subcommand("diag-text", "Cosine histogram of text embeddings vs a reference");
  dt->add_option("--data", o.data, "Dataset directory holding enzyme_text and its reference");
  dt->add_option("--generated", o.generated, "TGEM of generated text embeddings");
  dt->add_option("--reference", o.reference, "TGEM of reference text embeddings");
  dt->add_option("--threshold", o.threshold, "Cosine threshold (default 0.95)");
  dt->add_option("--out", o.out, "Report JSON path (default: print to stdout)");
  dt->add_flag("--pretty", o.pretty, "Print an ASCII histogram");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(o, out);
    if (*tr) return cmd_train(o, out, err);
    if (*ev) return cmd_eval(o, out);
    if (*ab) return cmd_ablate(o, out);
    if (*dt) return cmd_diag_text(o, out);
  } catch (const SplitInfeasibleError& e) {
    err << "error: split infeasible: " << e.what() << "\n";
    return kSplitInfeasible;
  } catch (const ConfigError& e) {
    err << "error: config: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "error: data: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace tiger::cli
