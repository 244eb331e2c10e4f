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

#include <chrono>
#include <cmath>
#include <functional>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tiger/io.hpp"
#include "tiger/reaction_encoder.hpp"
#include "tiger/synthetic.hpp"

namespace tiger {
namespace {

namespace fs = std::filesystem;
using testing::random_matrix;
using testing::temp_dir;

std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "id") {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

EmbeddingTable random_table(std::uint64_t seed, std::size_t rows, std::size_t dim) {
  CounterRng rng(seed);
  return EmbeddingTable(Modality::enzyme_seq, make_ids(rows), random_matrix(rng, rows, dim));
}

// ---- RNG ---------------------------------------------------------------------

TEST(CounterRng, MatchesReferenceSplitMix64) {
  // Textbook SplitMix64: state += golden; output = finalize(state).
  std::uint64_t state = 1234567;
  auto reference = [&] {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  CounterRng rng(1234567);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(rng.next_u64(), reference());
}

TEST(CounterRng, DerivedStreamsDiffer) {
  EXPECT_NE(derive_seed(1, "init"), derive_seed(1, "shuffle"));
  EXPECT_NE(derive_seed(1, "init"), derive_seed(2, "init"));
  EXPECT_EQ(derive_seed(7, "split"), derive_seed(7, "split"));
}

// ---- TGEM ----------------------------------------------------------------------

TEST(Tgem, RoundTripIsByteIdentical) {
  const fs::path dir = temp_dir("tgem");
  const EmbeddingTable t = random_table(3, 3, 4);
  write_embedding_table(t, dir / "a.tgem", dir / "a.json");
  const EmbeddingTable back = load_embedding_table(dir / "a.tgem", dir / "a.json");
  EXPECT_EQ(back.ids(), t.ids());
  EXPECT_EQ(back.matrix(), t.matrix());
  EXPECT_EQ(back.modality(), t.modality());
  write_embedding_table(back, dir / "b.tgem", dir / "b.json");
  EXPECT_EQ(read_file(dir / "a.tgem"), read_file(dir / "b.tgem"));
  EXPECT_EQ(read_file(dir / "a.json"), read_file(dir / "b.json"));
}

TEST(Tgem, LargeTableChecksumSurvivesRoundTrip) {
  const fs::path dir = temp_dir("tgem");
  write_embedding_table(random_table(4, 1000, 64), dir / "a.tgem", dir / "a.json");
  const std::string first = read_file(dir / "a.tgem");
  write_embedding_table(load_embedding_table(dir / "a.tgem", dir / "a.json"), dir / "b.tgem",
                        dir / "b.json");
  EXPECT_EQ(first.size(), 16u + 1000u * 64u * 4u);
  EXPECT_EQ(std::hash<std::string>{}(first), std::hash<std::string>{}(read_file(dir / "b.tgem")));
}

TEST(Tgem, EmptyTableIsHeaderOnly) {
  const fs::path dir = temp_dir("tgem");
  const EmbeddingTable t(Modality::molecule, {}, Tensor::matrix(0, 4));
  write_embedding_table(t, dir / "e.tgem", dir / "e.json");
  const std::string bytes = read_file(dir / "e.tgem");
  const std::string want("TGEM\x01\0\0\0\0\0\0\0\x04\0\0\0", 16);
  EXPECT_EQ(bytes, want);
  EXPECT_EQ(load_embedding_table(dir / "e.tgem", dir / "e.json").rows(), 0u);
}

TEST(Tgem, SingleValueEncodesAsIeee754LittleEndian) {
  const fs::path dir = temp_dir("tgem");
  const EmbeddingTable t(Modality::enzyme_text, {"x"}, Tensor::matrix(1, 1, {1.0f}));
  write_embedding_table(t, dir / "o.tgem", dir / "o.json");
  const std::string bytes = read_file(dir / "o.tgem");
  ASSERT_EQ(bytes.size(), 20u);
  EXPECT_EQ(bytes.substr(16), std::string("\x00\x00\x80\x3F", 4));
}

TEST(Tgem, TruncatedFileIsFormatError) {
  const fs::path dir = temp_dir("tgem");
  write_embedding_table(random_table(5, 3, 4), dir / "a.tgem", dir / "a.json");
  std::string bytes = read_file(dir / "a.tgem");
  for (const std::size_t keep : {std::size_t{0}, std::size_t{10}, bytes.size() - 1}) {
    write_file(dir / "a.tgem", bytes.substr(0, keep));
    EXPECT_THROW(load_embedding_table(dir / "a.tgem", dir / "a.json"), FormatError) << keep;
  }
}

TEST(Tgem, BadMagicIsFormatError) {
  const fs::path dir = temp_dir("tgem");
  write_embedding_table(random_table(5, 2, 2), dir / "a.tgem", dir / "a.json");
  std::string bytes = read_file(dir / "a.tgem");
  bytes[0] = 'X';
  write_file(dir / "a.tgem", bytes);
  EXPECT_THROW(load_embedding_table(dir / "a.tgem", dir / "a.json"), FormatError);
}

TEST(Tgem, ManifestDimMismatchIsConsistencyError) {
  const fs::path dir = temp_dir("tgem");
  write_embedding_table(random_table(5, 2, 3), dir / "a.tgem", dir / "a.json");
  auto manifest = read_json(dir / "a.json");
  manifest["dim"] = 4;
  write_json(dir / "a.json", manifest);
  EXPECT_THROW(load_embedding_table(dir / "a.tgem", dir / "a.json"), ConsistencyError);
}

TEST(Tgem, DuplicateManifestIdNamesTheId) {
  const fs::path dir = temp_dir("tgem");
  write_embedding_table(random_table(5, 3, 2), dir / "a.tgem", dir / "a.json");
  auto manifest = read_json(dir / "a.json");
  manifest["ids"] = {"p", "q", "p"};
  write_json(dir / "a.json", manifest);
  try {
    load_embedding_table(dir / "a.tgem", dir / "a.json");
    FAIL() << "expected ConsistencyError";
  } catch (const ConsistencyError& e) {
    EXPECT_NE(std::string(e.what()).find("'p'"), std::string::npos) << e.what();
  }
}

TEST(Tgem, NonFiniteValueNamesTheRow) {
  Tensor m = Tensor::matrix(3, 2);
  m(2, 1) = std::numeric_limits<float>::quiet_NaN();
  try {
    EmbeddingTable(Modality::molecule, make_ids(3), m);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(Tgem, UnwritablePathIsIoError) {
  EXPECT_THROW(write_embedding_table(random_table(1, 1, 1), "/nonexistent/dir/a.tgem",
                                     "/nonexistent/dir/a.json"),
               IoError);
}

// ---- pairs ---------------------------------------------------------------------

TEST(Pairs, ParsesValidLinesInOrder) {
  const PairSet p = parse_pairs("# header\nE1\tR1\n\nE2\tR9\n");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.pairs[0], std::make_pair(std::string("E1"), std::string("R1")));
  EXPECT_EQ(p.pairs[1], std::make_pair(std::string("E2"), std::string("R9")));
}

TEST(Pairs, ThreeFieldsIsParseErrorWithLineNumber) {
  try {
    parse_pairs("E1\tR1\nE2\tR2\tX\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Pairs, DuplicateIsConsistencyError) {
  EXPECT_THROW(parse_pairs("E1\tR1\nE1\tR1\n"), ConsistencyError);
}

TEST(Pairs, TenThousandLinesParseQuickly) {
  const fs::path dir = temp_dir("pairs");
  PairSet big;
  for (int i = 0; i < 10000; ++i) {
    big.pairs.emplace_back("E" + std::to_string(i), "R" + std::to_string(i % 97));
  }
  write_pairs(big, dir / "p.tsv");
  const auto start = std::chrono::steady_clock::now();
  const PairSet back = load_pairs(dir / "p.tsv");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(back.pairs, big.pairs);
  EXPECT_LT(secs, 1.0);
}

// ---- bundle ----------------------------------------------------------------------

TEST(Bundle, RejectsDanglingReferences) {
  SyntheticConfig cfg;
  cfg.n_enzymes = 6;
  cfg.n_reactions = 3;
  DatasetBundle b = generate_synthetic_dataset(cfg, 1).bundle;
  b.validate();

  DatasetBundle bad = b;
  bad.reactions[0].substrate_ids.push_back("missing_molecule");
  EXPECT_THROW(bad.validate(), LookupError);

  bad = b;
  bad.reactions[1].substrate_ids.clear();
  bad.reactions[1].product_ids.clear();
  EXPECT_THROW(bad.validate(), ConsistencyError);

  bad = b;
  bad.enzyme_timestamps->erase(bad.enzyme_timestamps->begin());
  EXPECT_THROW(bad.validate(), ConsistencyError);

  bad = b;
  bad.pairs.pairs.emplace_back("nobody", b.reactions[0].reaction_id);
  EXPECT_THROW(bad.validate(), LookupError);
}

TEST(Bundle, DatasetDirectoryRoundTrip) {
  const fs::path dir = temp_dir("ds");
  SyntheticConfig cfg;
  cfg.n_enzymes = 20;
  cfg.n_reactions = 8;
  const DatasetBundle b = generate_synthetic_dataset(cfg, 2).bundle;
  write_dataset_dir(b, dir);
  const DatasetBundle back = load_dataset_dir(dir);
  EXPECT_EQ(back.enzyme_seq.matrix(), b.enzyme_seq.matrix());
  EXPECT_EQ(back.enzyme_text->matrix(), b.enzyme_text->matrix());
  EXPECT_EQ(back.molecules.ids(), b.molecules.ids());
  EXPECT_EQ(back.pairs.pairs, b.pairs.pairs);
  EXPECT_EQ(*back.enzyme_timestamps, *b.enzyme_timestamps);
  ASSERT_EQ(back.reactions.size(), b.reactions.size());
  for (std::size_t i = 0; i < b.reactions.size(); ++i) {
    EXPECT_EQ(back.reactions[i].substrate_ids, b.reactions[i].substrate_ids);
    EXPECT_EQ(back.reactions[i].product_ids, b.reactions[i].product_ids);
  }
}

// ---- generator --------------------------------------------------------------------

TEST(Synthetic, SameSeedGivesByteIdenticalDirectories) {
  const SyntheticConfig cfg;
  const fs::path a = temp_dir("a"), b = temp_dir("b");
  write_dataset_dir(generate_synthetic_dataset(cfg, 9).bundle, a);
  write_dataset_dir(generate_synthetic_dataset(cfg, 9).bundle, b);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(read_file(entry.path()), read_file(b / entry.path().filename()))
        << entry.path().filename();
  }
  EXPECT_GT(files, 0u);
  EXPECT_NE(generate_synthetic_dataset(cfg, 10).bundle.enzyme_seq.matrix(),
            generate_synthetic_dataset(cfg, 9).bundle.enzyme_seq.matrix());
}

TEST(Synthetic, InvalidConfigIsConfigError) {
  SyntheticConfig cfg;
  cfg.noise_std = -1.0;
  EXPECT_THROW(generate_synthetic_dataset(cfg, 1), ConfigError);
  cfg = SyntheticConfig{};
  cfg.text_corruption_fraction = 1.5;
  EXPECT_THROW(generate_synthetic_dataset(cfg, 1), ConfigError);
  cfg = SyntheticConfig{};
  cfg.n_clusters = 0;
  EXPECT_THROW(generate_synthetic_dataset(cfg, 1), ConfigError);
}

Eigen::MatrixXd to_eigen(const Tensor64& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t(i, j);
  return m;
}

Eigen::MatrixXd to_eigen(const Tensor& t) { return to_eigen(t.cast<double>()); }

TEST(Synthetic, NoiselessPairsShareRecoveredLatent) {
  SyntheticConfig cfg;
  cfg.noise_std = 0.0;
  const SyntheticDataset ds = generate_synthetic_dataset(cfg, 5);
  const DatasetBundle& b = ds.bundle;
  // Least-squares recovery of latents from each modality's raw embedding.
  const Eigen::MatrixXd seq_pinv =
      to_eigen(ds.seq_map).completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd mol_pinv =
      to_eigen(ds.mol_map).completeOrthogonalDecomposition().pseudoInverse();
  const Eigen::MatrixXd z_e = to_eigen(b.enzyme_seq.matrix()) * seq_pinv;
  const Eigen::MatrixXd z_r = to_eigen(aggregate_all(b).matrix()) * mol_pinv;
  double worst = 0.0;
  for (const auto& [e, r] : b.pairs.pairs) {
    const auto ei = static_cast<Eigen::Index>(b.enzyme_seq.index_of(e));
    const auto ri = static_cast<Eigen::Index>(b.reaction_index(r));
    worst = std::max(worst, (z_e.row(ei) - z_r.row(ri)).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-4);
}

double mean_row_cosine(const Tensor& a, const Tensor& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      dot += static_cast<double>(a(i, j)) * b(i, j);
      na += static_cast<double>(a(i, j)) * a(i, j);
      nb += static_cast<double>(b(i, j)) * b(i, j);
    }
    total += dot / std::sqrt(na * nb);
  }
  return total / static_cast<double>(a.rows());
}

TEST(Synthetic, FullCorruptionDecorrelatesText) {
  SyntheticConfig cfg;
  cfg.text_dim = 64;
  cfg.text_corruption_fraction = 1.0;
  const SyntheticDataset ds = generate_synthetic_dataset(cfg, 3);
  EXPECT_LE(std::abs(mean_row_cosine(ds.bundle.enzyme_text->matrix(),
                                     ds.text_reference->matrix())),
            0.1);
  for (const bool c : ds.text_corrupted) EXPECT_TRUE(c);
}

TEST(Synthetic, NoCorruptionKeepsReferenceText) {
  SyntheticConfig cfg;
  const SyntheticDataset ds = generate_synthetic_dataset(cfg, 3);
  EXPECT_EQ(ds.bundle.enzyme_text->matrix(), ds.text_reference->matrix());
}

TEST(Synthetic, TimestampsFollowClusterOrder) {
  const SyntheticDataset ds = generate_synthetic_dataset(SyntheticConfig{}, 4);
  const auto& ids = ds.bundle.enzyme_seq.ids();
  const auto& ts = *ds.bundle.enzyme_timestamps;
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (std::size_t c = 0; c < ids.size(); c += 37) {
      const std::size_t ca = ds.reaction_cluster[ds.enzyme_reaction[a]];
      const std::size_t cc = ds.reaction_cluster[ds.enzyme_reaction[c]];
      if (ca < cc) EXPECT_LT(ts.at(ids[a]), ts.at(ids[c]));
    }
  }
}

TEST(Synthetic, EveryReactionHasAnEnzyme) {
  const SyntheticDataset ds = generate_synthetic_dataset(SyntheticConfig{}, 6);
  std::vector<int> seen(ds.bundle.reactions.size(), 0);
  for (const std::size_t r : ds.enzyme_reaction) seen[r] = 1;
  for (const int s : seen) EXPECT_EQ(s, 1);
}

// ---- reaction encoder -----------------------------------------------------------

EmbeddingTable molecule_table(std::vector<std::string> ids, std::size_t dim,
                              std::vector<float> values) {
  const std::size_t n = ids.size();
  return EmbeddingTable(Modality::molecule, std::move(ids),
                        Tensor::matrix(n, dim, std::move(values)));
}

TEST(ReactionEncoder, MeanOverSubstratesAndProducts) {
  const EmbeddingTable mols = molecule_table({"m1", "m2"}, 2, {1, 0, 0, 1});
  const ReactionEmbedding r = aggregate_reaction({"r", {"m1"}, {"m2"}}, mols);
  EXPECT_EQ(r.reaction_id, "r");
  EXPECT_EQ(r.vector, (std::vector<float>{0.5f, 0.5f}));
}

TEST(ReactionEncoder, SingleMoleculeIsItsOwnVector) {
  const EmbeddingTable mols = molecule_table({"m"}, 3, {0.1f, -2.5f, 7.0f});
  EXPECT_EQ(aggregate_reaction({"r", {}, {"m"}}, mols).vector,
            (std::vector<float>{0.1f, -2.5f, 7.0f}));
}

TEST(ReactionEncoder, MoleculeOnBothSidesCountsTwice) {
  const EmbeddingTable mols = molecule_table({"a", "b"}, 1, {3, 0});
  EXPECT_EQ(aggregate_reaction({"r", {"a"}, {"a", "b"}}, mols).vector, (std::vector<float>{2}));
}

TEST(ReactionEncoder, MatchesDoubleMeanOracle) {
  CounterRng rng(13);
  const EmbeddingTable mols =
      EmbeddingTable(Modality::molecule, make_ids(5, "m"), random_matrix(rng, 5, 8));
  const ReactionEmbedding r = aggregate_reaction({"r", {"m0", "m1", "m2"}, {"m3", "m4"}}, mols);
  for (std::size_t j = 0; j < 8; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) s += mols.matrix()(i, j);
    EXPECT_NEAR(r.vector[j], s / 5.0, 1e-6 * std::max(1.0, std::abs(s / 5.0)));
  }
}

TEST(ReactionEncoder, MissingMoleculeIsLookupErrorNamingId) {
  const EmbeddingTable mols = molecule_table({"m"}, 1, {1});
  try {
    aggregate_reaction({"r", {"m"}, {"ghost"}}, mols);
    FAIL() << "expected LookupError";
  } catch (const LookupError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(ReactionEncoder, EmptyCompositionIsDomainError) {
  const EmbeddingTable mols = molecule_table({"m"}, 1, {1});
  EXPECT_THROW(aggregate_reaction({"r", {}, {}}, mols), DomainError);
}

TEST(ReactionEncoder, PermutationInvariantAndLinear) {
  CounterRng rng(14);
  const Tensor base = random_matrix(rng, 4, 6);
  Tensor scaled = base;
  for (auto& v : scaled.data()) v *= 3.0f;
  const EmbeddingTable a(Modality::molecule, make_ids(4, "m"), base);
  const EmbeddingTable b(Modality::molecule, make_ids(4, "m"), scaled);
  const auto r1 = aggregate_reaction({"r", {"m0", "m1"}, {"m2", "m3"}}, a).vector;
  const auto r2 = aggregate_reaction({"r", {"m3", "m1"}, {"m0", "m2"}}, a).vector;
  const auto r3 = aggregate_reaction({"r", {"m0", "m1"}, {"m2", "m3"}}, b).vector;
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(r1[j], r2[j]);
    EXPECT_NEAR(r3[j], 3.0 * r1[j], 1e-6 * std::max(1.0, std::abs(3.0 * r1[j])));
  }
}

TEST(ReactionEncoder, NormBoundedByLargestMolecule) {
  CounterRng rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const EmbeddingTable mols(Modality::molecule, make_ids(5, "m"), random_matrix(rng, 5, 7));
    const auto r = aggregate_reaction({"r", {"m0", "m1", "m2"}, {"m3", "m4"}}, mols).vector;
    double rn = 0.0, max_n = 0.0;
    for (const float v : r) rn += static_cast<double>(v) * v;
    for (std::size_t i = 0; i < 5; ++i) {
      double n = 0.0;
      for (const float v : mols.row(i)) n += static_cast<double>(v) * v;
      max_n = std::max(max_n, n);
    }
    EXPECT_LE(std::sqrt(rn), std::sqrt(max_n) * (1 + 1e-6));
  }
}

TEST(ReactionEncoder, AggregateAllMatchesLoopedOracle) {
  const DatasetBundle b = generate_synthetic_dataset(SyntheticConfig{}, 8).bundle;
  const EmbeddingTable all = aggregate_all(b);
  ASSERT_EQ(all.rows(), 200u);
  EXPECT_EQ(all.modality(), Modality::reaction);
  for (std::size_t r = 0; r < b.reactions.size(); ++r) {
    EXPECT_EQ(all.ids()[r], b.reactions[r].reaction_id);
    const auto want = aggregate_reaction(b.reactions[r], b.molecules).vector;
    const auto got = all.row(r);
    EXPECT_TRUE(std::equal(got.begin(), got.end(), want.begin())) << r;
  }
}

}  // namespace
}  // namespace tiger
