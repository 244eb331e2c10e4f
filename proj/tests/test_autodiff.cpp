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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tiger/gradcheck.hpp"

namespace tiger {
namespace {

using testing::random_matrix;

Tensor64 m64(std::size_t r, std::size_t c, std::vector<double> v) {
  return Tensor64::matrix(r, c, std::move(v));
}

// ---- tensor ------------------------------------------------------------------

TEST(Tensor, DataLengthMustMatchShape) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<float>(5)), ShapeError);
  const Tensor t(Shape{2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Tensor, VectorAndScalarUseMatrixView) {
  const Tensor v = Tensor::vector({1, 2, 3});
  EXPECT_EQ(v.rows(), 1u);
  EXPECT_EQ(v.cols(), 3u);
  const Tensor s = Tensor::scalar(4.0f);
  EXPECT_EQ(s.rank(), 0u);
  EXPECT_EQ(s.item(), 4.0f);
}

// ---- matmul ------------------------------------------------------------------

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Tape<double> tape;
  auto c = matmul(tape.constant(Tensor64::identity(2)), tape.constant(m64(2, 2, {1, 2, 3, 4})));
  EXPECT_EQ(c.value(), m64(2, 2, {1, 2, 3, 4}));
}

TEST(Matmul, BasisRowSelectsEntry) {
  Tape<double> tape;
  auto c = matmul(tape.constant(m64(1, 2, {1, 0})), tape.constant(m64(2, 1, {5, 7})));
  EXPECT_EQ(c.value(), m64(1, 1, {5}));
}

TEST(Matmul, ShapeErrorNamesBothShapes) {
  Tape<float> tape;
  try {
    matmul(tape.constant(Tensor::matrix(2, 3)), tape.constant(Tensor::matrix(4, 5)));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x5]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientsMatchCentralDifferences) {
  CounterRng rng(11);
  NamedParams<double> p;
  p.tensors["a"] = random_matrix<double>(rng, 4, 3);
  p.tensors["b"] = random_matrix<double>(rng, 3, 2);
  const Tensor64 w = random_matrix<double>(rng, 4, 2);
  auto report = finite_diff_check(
      [&](const Binder<double>& b, const NamedParams<double>& q) {
        auto c = matmul(b(q.tensors.at("a")), b(q.tensors.at("b")));
        return sum(mul(c, b.constant(w)));
      },
      p, 1e-3);
  EXPECT_EQ(report.coordinates, 18u);
  EXPECT_LE(report.max_rel_err, 1e-4);
}

TEST(Matmul, AssociativityOnRandomChains) {
  CounterRng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tape<float> tape;
    auto a = tape.constant(random_matrix(rng, 8, 8));
    auto b = tape.constant(random_matrix(rng, 8, 8));
    auto c = tape.constant(random_matrix(rng, 8, 8));
    const Tensor left = matmul(matmul(a, b), c).value();
    const Tensor right = matmul(a, matmul(b, c)).value();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < left.size(); ++i) {
      num = std::max(num, std::abs(static_cast<double>(left[i]) - right[i]));
      den = std::max(den, std::abs(static_cast<double>(right[i])));
    }
    EXPECT_LE(num / den, 1e-4);
  }
}

// ---- softmax -----------------------------------------------------------------

TEST(SoftmaxRows, SingleElementRowIsOne) {
  for (const double x : {-300.0, 0.0, 7.5, 1e6}) {
    Tape<double> tape;
    EXPECT_EQ(softmax_rows(tape.constant(m64(1, 1, {x}))).value()[0], 1.0);
  }
}

TEST(SoftmaxRows, EqualEntriesSplitEvenly) {
  Tape<double> tape;
  EXPECT_EQ(softmax_rows(tape.constant(m64(1, 2, {0, 0}))).value(), m64(1, 2, {0.5, 0.5}));
}

TEST(SoftmaxRows, LargeLogitsDoNotOverflow) {
  Tape<float> tape;
  const Tensor y = softmax_rows(tape.constant(Tensor::matrix(1, 2, {1000.0f, 0.0f}))).value();
  // log-sum-exp oracle in double
  const double lse = 1000.0 + std::log1p(std::exp(-1000.0));
  EXPECT_NEAR(y[0], std::exp(1000.0 - lse), 1e-7);
  EXPECT_NEAR(y[1], std::exp(0.0 - lse), 1e-7);
}

TEST(SoftmaxRows, RowsSumToOneOnRandomMatrices) {
  CounterRng rng(21);
  for (const double scale : {0.1, 1.0, 30.0, 500.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      Tape<float> tape;
      const Tensor y = softmax_rows(tape.constant(random_matrix(rng, 7, 13, scale))).value();
      for (std::size_t i = 0; i < y.rows(); ++i) {
        double s = 0.0;
        for (const float v : y.row(i)) {
          EXPECT_GE(v, 0.0f);
          s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-6);
      }
    }
  }
}

// ---- layer norm --------------------------------------------------------------

TEST(LayerNorm, ConstantRowCollapsesToZero) {
  Tape<double> tape;
  auto y = layer_norm(tape.constant(m64(1, 3, {4, 4, 4})),
                      tape.constant(Tensor64::filled(Shape{3}, 1.0)),
                      tape.constant(Tensor64(Shape{3})));
  EXPECT_EQ(y.value(), m64(1, 3, {0, 0, 0}));
}

TEST(LayerNorm, AlreadyNormalizedRowIsKept) {
  Tape<double> tape;
  auto y = layer_norm(tape.constant(m64(1, 2, {1, -1})),
                      tape.constant(Tensor64::filled(Shape{2}, 1.0)),
                      tape.constant(Tensor64(Shape{2})), 1e-12);
  EXPECT_NEAR(y.value()[0], 1.0, 1e-11);
  EXPECT_NEAR(y.value()[1], -1.0, 1e-11);
}

TEST(LayerNorm, RowsHaveZeroMeanAndUnitVariance) {
  CounterRng rng(3);
  Tape<float> tape;
  auto y = layer_norm(tape.constant(random_matrix(rng, 3, 5, 4.0)),
                      tape.constant(Tensor::filled(Shape{5}, 1.0f)),
                      tape.constant(Tensor(Shape{5})));
  for (std::size_t i = 0; i < 3; ++i) {
    double mean = 0.0, var = 0.0;
    for (const float v : y.value().row(i)) mean += v;
    mean /= 5.0;
    for (const float v : y.value().row(i)) var += (v - mean) * (v - mean);
    var /= 5.0;
    EXPECT_LE(std::abs(mean), 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(LayerNorm, GainAndBiasApplyAfterNormalization) {
  Tape<double> tape;
  auto y = layer_norm(tape.constant(m64(1, 2, {3, 1})), tape.constant(Tensor64::vector({2, 3})),
                      tape.constant(Tensor64::vector({10, 20})), 1e-12);
  EXPECT_NEAR(y.value()[0], 12.0, 1e-9);
  EXPECT_NEAR(y.value()[1], 17.0, 1e-9);
}

// ---- sigmoid -----------------------------------------------------------------

TEST(Sigmoid, SymmetryPointAndSaturation) {
  Tape<double> tape;
  const Tensor64 y = sigmoid(tape.constant(m64(1, 3, {0, 50, -50}))).value();
  EXPECT_EQ(y[0], 0.5);
  EXPECT_GE(y[1], 1.0 - 1e-9);
  EXPECT_LE(y[2], 1e-9);
  EXPECT_GT(y[2], 0.0);
}

TEST(Sigmoid, DerivativeMatchesClosedFormAndDifferences) {
  CounterRng rng(8);
  NamedParams<double> p;
  p.tensors["x"] = random_matrix<double>(rng, 2, 4, 2.0);
  Tape<double> tape;
  Binder<double> b(tape, true);
  b.bind_all(p);
  const GradMap<double> g = tape.backward(sum(sigmoid(b(p.tensors.at("x")))));
  for (std::size_t i = 0; i < 8; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-p.tensors.at("x")[i]));
    EXPECT_NEAR(g.at("x")[i], s * (1.0 - s), 1e-15);
  }
  auto report = finite_diff_check(
      [](const Binder<double>& bb, const NamedParams<double>& q) {
        return sum(sigmoid(bb(q.tensors.at("x"))));
      },
      p, 1e-3);
  EXPECT_LE(report.max_rel_err, 1e-5);
}

// ---- backward ----------------------------------------------------------------

TEST(Backward, SumGivesOnes) {
  Tape<double> tape;
  auto p = tape.param("p", Tensor64(Shape{2, 3, 1}));
  const GradMap<double> g = tape.backward(sum(p));
  EXPECT_EQ(g.at("p").shape(), (Shape{2, 3, 1}));
  for (const double v : g.at("p").data()) EXPECT_EQ(v, 1.0);
}

TEST(Backward, HalfSquaredNormGivesParameter) {
  CounterRng rng(4);
  const Tensor64 value = random_matrix<double>(rng, 3, 4);
  Tape<double> tape;
  auto p = tape.param("p", value);
  const GradMap<double> g = tape.backward(scale(sum(mul(p, p)), 0.5));
  for (std::size_t i = 0; i < value.size(); ++i) EXPECT_DOUBLE_EQ(g.at("p")[i], value[i]);
}

TEST(Backward, OffPathParametersGetExactZeros) {
  Tape<float> tape;
  auto used = tape.param("used", Tensor::matrix(2, 2, {1, 2, 3, 4}));
  tape.param("unused", Tensor::matrix(3, 1, {5, 6, 7}));
  const GradMap<float> g = tape.backward(sum(used));
  ASSERT_EQ(g.count("unused"), 1u);
  EXPECT_EQ(g.at("unused"), Tensor(Shape{3, 1}));
}

TEST(Backward, NonScalarLossIsContractError) {
  Tape<float> tape;
  auto p = tape.param("p", Tensor::matrix(2, 2));
  EXPECT_THROW(tape.backward(p), ContractError);
}

TEST(Backward, ForeignNodeIsStructuralError) {
  Tape<float> a, b;
  auto loss = sum(b.param("p", Tensor::matrix(1, 1)));
  EXPECT_THROW(a.backward(loss), StructuralError);
  Var<float> bogus{&a, 12345};
  EXPECT_THROW(a.backward(bogus), StructuralError);
}

TEST(Backward, DuplicateParameterNameIsStructuralError) {
  Tape<float> tape;
  tape.param("w", Tensor::matrix(1, 1));
  EXPECT_THROW(tape.param("w", Tensor::matrix(1, 1)), StructuralError);
}

TEST(Backward, RepeatedCallsAreBitIdentical) {
  CounterRng rng(9);
  Tape<float> tape;
  auto w = tape.param("w", random_matrix(rng, 5, 4));
  auto x = tape.constant(random_matrix(rng, 3, 5));
  auto loss = diag_cross_entropy(matmul(softmax_rows(matmul(x, w)), transpose(matmul(x, w))));
  EXPECT_EQ(tape.backward(loss), tape.backward(loss));
}

TEST(Backward, InputsPrecedeConsumers) {
  CounterRng rng(2);
  Tape<float> tape;
  auto w = tape.param("w", random_matrix(rng, 4, 4));
  auto x = tape.constant(random_matrix(rng, 2, 4));
  sum(layer_norm(gelu(matmul(x, w)), tape.constant(Tensor::filled(Shape{4}, 1.0f)),
                 tape.constant(Tensor(Shape{4}))));
  for (std::size_t id = 0; id < tape.size(); ++id)
    for (const std::size_t in : tape.node(id).inputs) EXPECT_LT(in, id);
}

TEST(Backward, NonFiniteForwardNamesTheOp) {
  Tape<float> tape;
  try {
    exp(tape.constant(Tensor::matrix(1, 1, {1000.0f})));
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("exp"), std::string::npos) << e.what();
  }
}

// ---- other ops ---------------------------------------------------------------

TEST(RowNormalize, ZeroRowIsDomainErrorNamingRow) {
  Tape<float> tape;
  try {
    row_normalize(tape.constant(Tensor::matrix(3, 2, {1, 0, 0, 0, 0, 1})));
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(MeanGroups, AveragesConsecutiveRows) {
  Tape<double> tape;
  auto y = mean_groups(tape.constant(m64(4, 2, {1, 2, 3, 4, 10, 20, 30, 40})), 2);
  EXPECT_EQ(y.value(), m64(2, 2, {2, 3, 20, 30}));
  EXPECT_THROW(mean_groups(tape.constant(m64(3, 1, {1, 2, 3})), 2), ShapeError);
}

TEST(ConcatCols, PlacesBlocksSideBySide) {
  Tape<double> tape;
  auto y = concat_cols(tape.constant(m64(2, 1, {1, 2})), tape.constant(m64(2, 2, {3, 4, 5, 6})));
  EXPECT_EQ(y.value(), m64(2, 3, {1, 3, 4, 2, 5, 6}));
}

// Literal per-head loop: out_h = softmax(Q_h K_hᵀ / sqrt(dh)) V_h per group.
Tensor64 attention_oracle(const Tensor64& q, const Tensor64& k, const Tensor64& v,
                          std::size_t heads, std::size_t lq, std::size_t lk) {
  const std::size_t d = q.cols(), dh = d / heads, groups = q.rows() / lq;
  Tensor64 out = Tensor64::matrix(q.rows(), d);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < lq; ++i) {
        std::vector<double> logits(lk);
        for (std::size_t j = 0; j < lk; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c) {
            dot += q(g * lq + i, h * dh + c) * k(g * lk + j, h * dh + c);
          }
          logits[j] = dot / std::sqrt(static_cast<double>(dh));
        }
        double mx = logits[0], z = 0.0;
        for (const double l : logits) mx = std::max(mx, l);
        for (double& l : logits) z += (l = std::exp(l - mx));
        for (std::size_t c = 0; c < dh; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < lk; ++j) acc += logits[j] / z * v(g * lk + j, h * dh + c);
          out(g * lq + i, h * dh + c) = acc;
        }
      }
    }
  }
  return out;
}

TEST(Attention, MatchesPerHeadLoop) {
  CounterRng rng(17);
  const Tensor64 q = random_matrix<double>(rng, 2 * 2, 6);
  const Tensor64 k = random_matrix<double>(rng, 2 * 3, 6);
  const Tensor64 v = random_matrix<double>(rng, 2 * 3, 6);
  Tape<double> tape;
  const Tensor64 got =
      attention(tape.constant(q), tape.constant(k), tape.constant(v), 3, 2, 3).value();
  const Tensor64 want = attention_oracle(q, k, v, 3, 2, 3);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Attention, SingleKeyIgnoresQueries) {
  CounterRng rng(1);
  const Tensor64 k = random_matrix<double>(rng, 3, 4);
  const Tensor64 v = random_matrix<double>(rng, 3, 4);
  Tape<double> tape;
  const Tensor64 a = attention(tape.constant(random_matrix<double>(rng, 3, 4)), tape.constant(k),
                               tape.constant(v), 2, 1, 1)
                         .value();
  const Tensor64 b = attention(tape.constant(random_matrix<double>(rng, 3, 4, 50.0)),
                               tape.constant(k), tape.constant(v), 2, 1, 1)
                         .value();
  EXPECT_EQ(a, v);
  EXPECT_EQ(b, v);
}

TEST(Attention, WidthMustSplitAcrossHeads) {
  Tape<float> tape;
  auto x = tape.constant(Tensor::matrix(2, 5));
  EXPECT_THROW(attention(x, x, x, 2, 1, 1), Error);
}

TEST(DiagCrossEntropy, RejectsNonSquare) {
  Tape<float> tape;
  EXPECT_THROW(diag_cross_entropy(tape.constant(Tensor::matrix(2, 3))), ShapeError);
}

// ---- gradient oracle on every op ----------------------------------------------

struct OpCase {
  const char* name;
  std::function<Var<double>(const Binder<double>&, const NamedParams<double>&)> build;
};

TEST(GradientOracle, EveryOpMatchesCentralDifferences) {
  CounterRng rng(31);
  NamedParams<double> p;
  p.tensors["a"] = random_matrix<double>(rng, 4, 3);
  p.tensors["b"] = random_matrix<double>(rng, 4, 3);
  p.tensors["c"] = random_matrix<double>(rng, 4, 1);
  p.tensors["r"] = random_matrix<double>(rng, 1, 3);
  p.tensors["s"] = Tensor64::scalar(0.7);
  p.tensors["sq"] = random_matrix<double>(rng, 4, 4, 2.0);
  p.tensors["g"] = random_matrix<double>(rng, 1, 3);
  const Tensor64 w = random_matrix<double>(rng, 4, 3);
  const Tensor64 w4 = random_matrix<double>(rng, 4, 4);
  const Tensor64 w23 = random_matrix<double>(rng, 2, 3);
  auto head = [&](const Binder<double>& b, Var<double> y) {
    return sum(mul(y, b.constant(y.cols() == 3 ? w : w4)));
  };
  auto P = [](const Binder<double>& b, const NamedParams<double>& q, const char* n) {
    return b(q.tensors.at(n));
  };
  const std::vector<OpCase> cases = {
      {"transpose", [&](auto& b, auto& q) { return sum(mul(transpose(P(b, q, "sq")), b.constant(w4))); }},
      {"add", [&](auto& b, auto& q) { return head(b, add(P(b, q, "a"), P(b, q, "b"))); }},
      {"sub", [&](auto& b, auto& q) { return head(b, sub(P(b, q, "a"), P(b, q, "b"))); }},
      {"mul", [&](auto& b, auto& q) { return head(b, mul(P(b, q, "a"), P(b, q, "b"))); }},
      {"add_row", [&](auto& b, auto& q) { return head(b, add_row(P(b, q, "a"), P(b, q, "r"))); }},
      {"mul_col", [&](auto& b, auto& q) { return head(b, mul_col(P(b, q, "a"), P(b, q, "c"))); }},
      {"scale_by", [&](auto& b, auto& q) { return head(b, scale_by(P(b, q, "a"), P(b, q, "s"))); }},
      {"exp", [&](auto& b, auto& q) { return head(b, exp(P(b, q, "a"))); }},
      {"one_minus", [&](auto& b, auto& q) { return head(b, one_minus(P(b, q, "a"))); }},
      {"gelu", [&](auto& b, auto& q) { return head(b, gelu(P(b, q, "a"))); }},
      {"softmax_rows", [&](auto& b, auto& q) { return head(b, softmax_rows(P(b, q, "a"))); }},
      {"layer_norm",
       [&](auto& b, auto& q) {
         return head(b, layer_norm(P(b, q, "a"), P(b, q, "g"), P(b, q, "r")));
       }},
      {"concat_cols",
       [&](auto& b, auto& q) { return sum(mul(concat_cols(P(b, q, "c"), P(b, q, "a")), b.constant(w4))); }},
      {"mean_groups", [&](auto& b, auto& q) { auto m = mean_groups(P(b, q, "a"), 2);
         return sum(mul(m, mul(m, b.constant(w23)))); }},
      {"row_normalize", [&](auto& b, auto& q) { return head(b, row_normalize(P(b, q, "a"))); }},
      {"attention",
       [&](auto& b, auto& q) {
         auto x = concat_cols(P(b, q, "a"), P(b, q, "c"));
         return sum(mul(attention(P(b, q, "sq"), x, mul(x, x), 2, 2, 2), b.constant(w4)));
       }},
      {"diag_cross_entropy", [&](auto& b, auto& q) { return diag_cross_entropy(P(b, q, "sq")); }},
  };
  for (const OpCase& c : cases) {
    const FdReport r = finite_diff_check(c.build, p, 1e-5);
    EXPECT_LE(r.max_rel_err, 1e-6) << c.name;
    EXPECT_LE(r.max_small_abs_err, 1e-9) << c.name;
  }
}

TEST(GradientOracle, ReluAwayFromKink) {
  NamedParams<double> p;
  p.tensors["x"] = m64(1, 4, {-1.5, -0.2, 0.3, 2.0});
  const FdReport r = finite_diff_check(
      [](const Binder<double>& b, const NamedParams<double>& q) {
        auto y = relu(b(q.tensors.at("x")));
        return sum(mul(y, y));
      },
      p, 1e-3);
  EXPECT_LE(r.max_rel_err, 1e-9);
}

// ---- finite_diff_check itself --------------------------------------------------

TEST(FiniteDiffCheck, QuadraticIsExactUpToRounding) {
  CounterRng rng(6);
  NamedParams<double> p;
  p.tensors["p"] = random_matrix<double>(rng, 3, 3);
  const FdReport r = finite_diff_check(
      [](const Binder<double>& b, const NamedParams<double>& q) {
        auto x = b(q.tensors.at("p"));
        return sum(mul(x, x));
      },
      p, 1e-3);
  EXPECT_LE(r.max_rel_err, 1e-9);
}

TEST(FiniteDiffCheck, SigmoidCompositeWithinTolerance) {
  CounterRng rng(12);
  NamedParams<double> p;
  p.tensors["w"] = random_matrix<double>(rng, 3, 2);
  const Tensor64 x = random_matrix<double>(rng, 4, 3);
  const FdReport r = finite_diff_check(
      [&](const Binder<double>& b, const NamedParams<double>& q) {
        return sum(sigmoid(matmul(b.constant(x), b(q.tensors.at("w")))));
      },
      p, 1e-3);
  EXPECT_LE(r.max_rel_err, 1e-5);
}

TEST(FiniteDiffCheck, NonDeterministicFunctionIsRejected) {
  NamedParams<double> p;
  p.tensors["p"] = Tensor64::scalar(1.0);
  int calls = 0;
  EXPECT_THROW(finite_diff_check(
                   [&](const Binder<double>& b, const NamedParams<double>& q) {
                     ++calls;
                     return scale(sum(b(q.tensors.at("p"))), 1.0 + calls);
                   },
                   p, 1e-3),
               OracleError);
}

TEST(FiniteDiffCheck, NonPositiveStepIsRejected) {
  NamedParams<double> p;
  p.tensors["p"] = Tensor64::scalar(1.0);
  EXPECT_THROW(finite_diff_check([](const Binder<double>& b,
                                    const NamedParams<double>& q) { return sum(b(q.tensors.at("p"))); },
                                 p, 0.0),
               ContractError);
}

}  // namespace
}  // namespace tiger
