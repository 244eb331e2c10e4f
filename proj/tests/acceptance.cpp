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

// Acceptance gate: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "oracles.hpp"
#include "tiger/checkpoint.hpp"
#include "tiger/contrastive.hpp"
#include "tiger/evaluation.hpp"
#include "tiger/gradcheck.hpp"
#include "tiger/io.hpp"
#include "tiger/metrics.hpp"
#include "tiger/model.hpp"
#include "tiger/rng.hpp"
#include "tiger/splits.hpp"
#include "tiger/synthetic.hpp"
#include "tiger/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tiger;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tiger_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Tensor64 normal_matrix(CounterRng& rng, std::size_t r, std::size_t c) {
  Tensor64 m = Tensor64::matrix(r, c);
  for (auto& v : m.data()) v = rng.normal();
  return m;
}

// Held-out IID run on the default generator.
struct RunResult {
  double e2r_h1 = 0.0;
  double r2e_h1 = 0.0;
};

RunResult synthetic_run(std::uint64_t seed, double corruption, FusionMode fusion, double gamma) {
  SyntheticConfig sc;
  sc.text_corruption_fraction = corruption;
  const SyntheticDataset ds = generate_synthetic_dataset(sc, seed);
  const FeatureSet features = build_features(ds.bundle);
  const PairRows pairs = pair_rows(ds.bundle, features);
  const SplitSpec split = make_random_split(pairs.size(), 0.8, seed);
  PairRows train_pairs;
  for (const std::size_t k : split.train) train_pairs.push_back(pairs[k]);
  Architecture arch;
  arch.fusion = fusion;
  TrainConfig tc;
  tc.seed = seed;
  tc.gamma = gamma;
  const Checkpoint ck = train(features, train_pairs, arch, tc);
  const EvalReport rep = evaluate(ck, features, pairs, split.test, {1});
  return {rep.e2r.hit[0], rep.r2e.hit[0]};
}

// ---- criteria -------------------------------------------------------------------

Outcome gradient_oracle() {
  const InputDims dims{12, 10, 6};
  Architecture arch;
  arch.d = 8;
  arch.heads = 2;
  arch.activation = Activation::gelu;
  ModelParams<double> p = cast_block<double>(init_model(dims, arch, 1));
  // Unit-scale weights and non-zero biases keep every block away from the
  // regime where h = 1e-3 truncation error dominates tiny gradients.
  CounterRng jitter(1001);
  visit_params(p, [&](const std::string&, Tensor64& t) {
    if (t.rank() == 2) {
      for (auto& v : t.data()) v *= std::sqrt(3.0);
    } else if (t.rank() == 1) {
      for (auto& v : t.data()) v += 0.1 * jitter.normal();
    }
  });
  p.log_tau = Tensor64::scalar(0.0);
  CounterRng rng(1);
  const Tensor64 seq = normal_matrix(rng, 4, dims.seq_dim);
  const Tensor64 text = normal_matrix(rng, 4, dims.text_dim);
  const Tensor64 rxn = normal_matrix(rng, 4, dims.mol_dim);
  const auto t0 = std::chrono::steady_clock::now();
  const FdReport r = finite_diff_check(
      [&](const Binder<double>& b, const ModelParams<double>& q) {
        return batch_loss(b, q, seq, text, rxn, 0.5);
      },
      p, 1e-3);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {r.within(1e-3, 1e-6) && r.coordinates > 0 && secs < 60.0,
          fmt("%zu coords, max rel %.2e, small-grad abs %.2e, %.1fs", r.coordinates,
              r.max_rel_err, r.max_small_abs_err, secs)};
}

Outcome uniform_score_identity() {
  double worst = 0.0;
  for (const std::size_t n : {2u, 8u, 64u}) {
    const double got = loss_e2r(Tensor::filled(Shape{n, n}, 0.37f));
    worst = std::max(worst, std::abs(got - std::log(static_cast<double>(n))));
  }
  CounterRng rng(2);
  std::size_t bit_equal = 0;
  for (int m = 0; m < 100; ++m) {
    const std::size_t n = 2 + rng.below(30);
    Tensor s = Tensor::matrix(n, n);
    for (auto& v : s.data()) v = static_cast<float>(4.0 * rng.normal());
    Tensor st = Tensor::matrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) st(j, i) = s(i, j);
    const double a = loss_r2e(s), b = loss_e2r(st);
    bit_equal += std::memcmp(&a, &b, sizeof a) == 0 ? 1 : 0;
  }
  return {worst <= 1e-6 && bit_equal == 100,
          fmt("max |L - ln N| %.2e, bit-equal %zu/100", worst, bit_equal)};
}

Outcome metric_oracle() {
  const std::vector<std::size_t>& ks = default_ks();
  CounterRng rng(3);
  std::size_t agree = 0;
  for (int m = 0; m < 20; ++m) {
    Tensor s = Tensor::matrix(200, 300);
    // Coarse quantisation forces score ties.
    for (auto& v : s.data()) v = static_cast<float>(std::round(rng.normal() * 8.0) / 8.0);
    std::vector<std::vector<std::size_t>> gt(200);
    for (auto& g : gt) {
      const std::size_t n = 1 + rng.below(4);
      for (std::size_t i = 0; i < n; ++i) g.push_back(rng.below(300));
    }
    const RankResult rr = rank_queries(s, gt, ks.back());
    const MetricsReport got = compute_metrics(rr, ks);
    const oracle::Metrics want = oracle::full_sort_metrics(s, gt, ks);
    bool same = got.hit == want.hit && got.precision == want.precision &&
                got.mrr == want.mrr && got.mean_rank == want.mean_rank;
    for (std::size_t q = 0; q < gt.size(); ++q) same &= rr.queries[q].rank == want.ranks[q];
    agree += same ? 1 : 0;
  }
  return {agree == 20, fmt("%zu/20 matrices exactly equal", agree)};
}

Outcome learnability() {
  const auto t0 = std::chrono::steady_clock::now();
  double e2r = 0.0, r2e = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const RunResult r = synthetic_run(seed, 0.0, FusionMode::dgn, 0.5);
    e2r += r.e2r_h1 / 3.0;
    r2e += r.r2e_h1 / 3.0;
    per_seed += fmt(" [%.3f %.3f]", r.e2r_h1, r.r2e_h1);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {e2r >= 0.8 && r2e >= 0.8 && secs < 300.0,
          fmt("mean H@1 e2r %.3f r2e %.3f, %.0fs;", e2r, r2e, secs) + per_seed};
}

Outcome dgn_robustness() {
  int wins = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const RunResult d = synthetic_run(seed, 0.5, FusionMode::dgn, 0.5);
    const RunResult c = synthetic_run(seed, 0.5, FusionMode::concat, 0.5);
    const bool win = d.e2r_h1 >= c.e2r_h1 && d.r2e_h1 >= c.r2e_h1;
    wins += win ? 1 : 0;
    per_seed += fmt(" [dgn %.3f/%.3f concat %.3f/%.3f]", d.e2r_h1, d.r2e_h1, c.e2r_h1, c.r2e_h1);
  }
  return {wins >= 2, fmt("dgn >= concat in %d/3 seeds;", wins) + per_seed};
}

Outcome gamma_tradeoff() {
  int lower = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const RunResult half = synthetic_run(seed, 0.0, FusionMode::dgn, 0.5);
    const RunResult one = synthetic_run(seed, 0.0, FusionMode::dgn, 1.0);
    lower += one.r2e_h1 < half.r2e_h1 ? 1 : 0;
    per_seed += fmt(" [%.3f vs %.3f]", one.r2e_h1, half.r2e_h1);
  }
  return {lower >= 2, fmt("r2e H@1 lower at gamma 1 in %d/3 seeds;", lower) + per_seed};
}

Outcome split_integrity() {
  std::size_t checked = 0, failed = 0, infeasible = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SyntheticConfig sc;
    const DatasetBundle bundle = generate_synthetic_dataset(sc, seed).bundle;
    for (const SimilaritySide side : {SimilaritySide::enzyme, SimilaritySide::reaction}) {
      for (const double threshold : {0.8, 0.9, 0.95, 0.99}) {
        SplitSpec s;
        try {
          s = make_similarity_split(bundle, side, threshold, 0.8, seed);
        } catch (const SplitInfeasibleError&) {
          ++infeasible;
          continue;
        }
        const oracle::SplitAudit a = oracle::audit_similarity_split(bundle, s, side);
        ++checked;
        failed += a.partition_ok && a.items_one_sided && a.max_cross_cosine < threshold ? 0 : 1;
      }
    }
    for (const double f : {0.5, 0.8, 0.9}) {
      const SplitSpec s = make_time_split(bundle, f);
      ++checked;
      failed += oracle::time_split_ordered(bundle, s) ? 0 : 1;
    }
  }
  return {failed == 0 && checked > 9,
          fmt("%zu splits audited, %zu violations, %zu infeasible configurations", checked,
              failed, infeasible)};
}

Outcome format_round_trips() {
  const fs::path dir = scratch_dir("formats");
  SyntheticConfig sc;
  sc.n_enzymes = 80;
  sc.n_reactions = 30;
  const SyntheticDataset ds = generate_synthetic_dataset(sc, 8);
  bool ok = true;

  write_embedding_table(ds.bundle.enzyme_seq, dir / "a.tgem", dir / "a.json");
  const EmbeddingTable loaded = load_embedding_table(dir / "a.tgem", dir / "a.json");
  write_embedding_table(loaded, dir / "b.tgem", dir / "b.json");
  const bool tgem = read_file(dir / "a.tgem") == read_file(dir / "b.tgem") &&
                    read_file(dir / "a.json") == read_file(dir / "b.json");
  ok &= tgem;

  const FeatureSet features = build_features(ds.bundle);
  const PairRows pairs = pair_rows(ds.bundle, features);
  TrainConfig tc;
  tc.epochs = 2;
  tc.seed = 8;
  Architecture arch;
  arch.d = 16;
  const Checkpoint ck = train(features, pairs, arch, tc);
  save_checkpoint(ck, dir / "a.tgck");
  const Checkpoint back = load_checkpoint(dir / "a.tgck");
  save_checkpoint(back, dir / "b.tgck");
  const bool tgck = read_file(dir / "a.tgck") == read_file(dir / "b.tgck");
  ok &= tgck;

  auto probe = [&](const ModelParams<float>& p) {
    return similarity_matrix(embed_enzymes(p, features.seq, features.text),
                             embed_reactions(p, features.rxn), p.tau());
  };
  const Tensor s0 = probe(ck.params), s1 = probe(back.params);
  const bool sim = s0.shape() == s1.shape() &&
                   std::memcmp(s0.data().data(), s1.data().data(), s0.size() * sizeof(float)) == 0;
  ok &= sim;
  return {ok, fmt("tgem %s, tgck %s, similarity %s", tgem ? "identical" : "DIFFERS",
                  tgck ? "identical" : "DIFFERS", sim ? "bit-exact" : "DIFFERS")};
}

Outcome random_baseline() {
  constexpr std::size_t kPool = 100;
  double h = 0.0, h2 = 0.0;
  for (std::size_t k = 1; k <= kPool; ++k) {
    h += 1.0 / static_cast<double>(k);
    h2 += 1.0 / static_cast<double>(k * k);
  }
  const double expect = h / kPool;
  const double sd = std::sqrt(h2 / kPool - expect * expect);
  const double se = sd / std::sqrt(static_cast<double>(kPool));
  constexpr int kSeeds = 5;
  bool ok = true;
  double pooled_e2r = 0.0, pooled_r2e = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    SyntheticConfig sc;
    sc.n_enzymes = 300;
    sc.n_reactions = 150;
    const SyntheticDataset ds = generate_synthetic_dataset(sc, seed);
    const FeatureSet features = build_features(ds.bundle);
    const PairRows pairs = pair_rows(ds.bundle, features);
    // First pair of each of the first 100 distinct reactions: pool of 100 in
    // both directions with one ground truth per query.
    std::vector<std::size_t> test;
    std::vector<bool> taken(features.rxn.rows(), false);
    for (std::size_t k = 0; k < pairs.size() && test.size() < kPool; ++k) {
      if (taken[pairs[k].second]) continue;
      taken[pairs[k].second] = true;
      test.push_back(k);
    }
    if (test.size() < kPool) return {false, "dataset has fewer than 100 reactions with pairs"};
    Checkpoint ck;
    ck.params = init_model(features.dims, Architecture{}, seed);
    const EvalReport rep = evaluate(ck, features, pairs, test, {1});
    for (const MetricsReport* m : {&rep.e2r, &rep.r2e}) {
      ok &= std::abs(m->mrr - expect) <= 3 * se && m->pool_size == kPool;
    }
    pooled_e2r += rep.e2r.mrr / kSeeds;
    pooled_r2e += rep.r2e.mrr / kSeeds;
    per_seed += fmt(" [%.4f %.4f]", rep.e2r.mrr, rep.r2e.mrr);
  }
  const double pooled_se = se / std::sqrt(static_cast<double>(kSeeds));
  ok &= std::abs(pooled_e2r - expect) <= 3 * pooled_se;
  ok &= std::abs(pooled_r2e - expect) <= 3 * pooled_se;
  return {ok, fmt("expected %.4f, per seed +/- %.4f, pooled +/- %.4f; pooled %.4f %.4f; per seed",
                  expect, 3 * se, 3 * pooled_se, pooled_e2r, pooled_r2e) +
                  per_seed};
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  std::vector<std::string> full{"tiger"};
  full.insert(full.end(), args.begin(), args.end());
  const int code = tiger::cli::run(full, out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

Outcome determinism() {
  setenv("TIGER_THREADS", "1", 1);
  const fs::path dir = scratch_dir("determinism");
  const json cfg = {{"schema_version", 1},
                    {"data", {{"n_enzymes", 200}, {"n_reactions", 80}}},
                    {"train", {{"epochs", 3}}}};
  write_json(dir / "cfg.json", cfg);
  const std::string c = (dir / "cfg.json").string();
  const std::string data = (dir / "data").string();
  if (cli({"gen", "--config", c, "--seed", "5", "--out", data}) != 0) return {false, "gen failed"};
  for (const char* run : {"a", "b"}) {
    const std::string ck = (dir / (std::string(run) + ".tgck")).string();
    const std::string rep = (dir / (std::string(run) + ".json")).string();
    if (cli({"train", "--data", data, "--config", c, "--split", "random", "--seed", "9", "--out",
             ck}) != 0 ||
        cli({"eval", "--data", data, "--ckpt", ck, "--config", c, "--out", rep}) != 0) {
      return {false, "train or eval failed"};
    }
  }
  const bool ck_same = read_file(dir / "a.tgck") == read_file(dir / "b.tgck");
  const bool rep_same = read_file(dir / "a.json") == read_file(dir / "b.json");
  return {ck_same && rep_same, fmt("checkpoints %s, reports %s", ck_same ? "identical" : "DIFFER",
                                   rep_same ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"uniform-score identity", uniform_score_identity},
      {"metric oracle equivalence", metric_oracle},
      {"synthetic learnability", learnability},
      {"dgn robustness direction", dgn_robustness},
      {"gamma trade-off direction", gamma_tradeoff},
      {"split integrity", split_integrity},
      {"format round-trips", format_round_trips},
      {"random-model baseline", random_baseline},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
