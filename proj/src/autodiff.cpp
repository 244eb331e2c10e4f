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

#include "tiger/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace tiger {

// ---- Tape --------------------------------------------------------------------

template <class T>
const typename Tape<T>::Node& Tape<T>::node(std::size_t id) const {
  if (id >= nodes_.size()) {
    throw StructuralError("unknown node id " + std::to_string(id) +
                          " (tape has " + std::to_string(nodes_.size()) +
                          " nodes)");
  }
  return nodes_[id];
}

template <class T>
Var<T> Tape<T>::constant(BasicTensor<T> value) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value in constant leaf");
  }
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Tape<T>::param(const std::string& name, BasicTensor<T> value) {
  if (params_.contains(name)) {
    throw StructuralError("parameter '" + name + "' registered twice");
  }
  if (!value.all_finite()) {
    throw NumericError("non-finite value in parameter '" + name + "'");
  }
  Node n;
  n.op = "param";
  n.value = std::move(value);
  n.needs_grad = true;
  n.param_name = name;
  nodes_.push_back(std::move(n));
  params_.emplace(name, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

template <class T>
Var<T> Tape<T>::record(std::string_view op, BasicTensor<T> value,
                       std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericError("op '" + std::string(op) + "' produced a non-finite value");
  }
  Node n;
  n.op = std::string(op);
  n.value = std::move(value);
  for (const std::size_t in : inputs) {
    if (in >= nodes_.size()) {
      throw StructuralError("op '" + n.op + "' references unknown node " +
                            std::to_string(in));
    }
    n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
  }
  n.inputs = std::move(inputs);
  // Constant subgraphs never need their closures.
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <class T>
GradMap<T> Tape<T>::backward(Var<T> loss) const {
  if (loss.tape != this) {
    throw StructuralError("loss node belongs to a different tape");
  }
  const Node& root = node(loss.id);
  if (root.value.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_str(root.value.shape()));
  }

  std::vector<BasicTensor<T>> grads(loss.id + 1);
  std::vector<bool> has(loss.id + 1, false);
  grads[loss.id] = BasicTensor<T>::filled(root.value.shape(), T{1});
  has[loss.id] = true;

  std::vector<BasicTensor<T>*> in_grads;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!has[i] || !n.needs_grad || !n.backward) continue;
    in_grads.assign(n.inputs.size(), nullptr);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const std::size_t in = n.inputs[k];
      if (!nodes_[in].needs_grad) continue;
      if (!has[in]) {
        grads[in] = BasicTensor<T>(nodes_[in].value.shape());
        has[in] = true;
      }
      in_grads[k] = &grads[in];
    }
    n.backward(*this, n, grads[i], in_grads);
  }

  GradMap<T> out;
  for (const auto& [name, id] : params_) {
    if (id <= loss.id && has[id]) {
      out.emplace(name, grads[id]);
    } else {
      out.emplace(name, BasicTensor<T>(nodes_[id].value.shape()));
    }
  }
  return out;
}

// ---- helpers -------------------------------------------------------------------

namespace {

template <class T>
void require_same_tape(Var<T> a, Var<T> b, std::string_view op) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw StructuralError("op '" + std::string(op) +
                          "' mixes nodes from different tapes");
  }
}

template <class T>
void require_same_shape(Var<T> a, Var<T> b, std::string_view op) {
  require_same_tape(a, b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("op '" + std::string(op) + "': shapes " +
                     shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                     " differ");
  }
}

template <class T>
void accumulate(BasicTensor<T>* dst, const BasicTensor<T>& src) {
  if (dst == nullptr) return;
  auto d = dst->data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// Elementwise unary op with derivative expressed through (x, y).
template <class T, class F, class D>
Var<T> unary(std::string_view op, Var<T> x, F f, D dfdx) {
  const BasicTensor<T>& xv = x.value();
  BasicTensor<T> y(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) y[i] = f(xv[i]);
  return x.tape->record(
      op, std::move(y), {x.id},
      [dfdx](const Tape<T>& tape, const typename Tape<T>::Node& n,
             const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        if (gs[0] == nullptr) return;
        const BasicTensor<T>& xin = tape.value(n.inputs[0]);
        auto& out = *gs[0];
        for (std::size_t i = 0; i < g.size(); ++i) {
          out[i] += g[i] * dfdx(xin[i], n.value[i]);
        }
      });
}

template <class T>
T stable_sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

// c[m×n] += a[m×k]·b[k×n], with optional transposes of the stored operands.
template <class T>
void gemm_acc(const BasicTensor<T>& a, bool ta, const BasicTensor<T>& b,
              bool tb, BasicTensor<T>& c) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  const std::size_t lda = a.cols();
  const std::size_t ldb = b.cols();
  const auto ad = a.data();
  const auto bd = b.data();
  auto cd = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      const T av = ta ? ad[t * lda + i] : ad[i * lda + t];
      if (av == T{0}) continue;
      T* crow = cd.data() + i * n;
      if (!tb) {
        const T* brow = bd.data() + t * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * bd[j * ldb + t];
      }
    }
  }
}

}  // namespace

// ---- ops -------------------------------------------------------------------

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require_same_tape(a, b, "matmul");
  const BasicTensor<T>& av = a.value();
  const BasicTensor<T>& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions differ for " +
                     shape_str(av.shape()) + " and " + shape_str(bv.shape()));
  }
  BasicTensor<T> c = BasicTensor<T>::matrix(av.rows(), bv.cols());
  gemm_acc(av, false, bv, false, c);
  return a.tape->record(
      "matmul", std::move(c), {a.id, b.id},
      [](const Tape<T>& tape, const typename Tape<T>::Node& n,
         const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        const BasicTensor<T>& A = tape.value(n.inputs[0]);
        const BasicTensor<T>& B = tape.value(n.inputs[1]);
        if (gs[0]) {
          BasicTensor<T> da = BasicTensor<T>::matrix(A.rows(), A.cols());
          gemm_acc(g, false, B, true, da);
          accumulate(gs[0], da);
        }
        if (gs[1]) {
          BasicTensor<T> db = BasicTensor<T>::matrix(B.rows(), B.cols());
          gemm_acc(A, true, g, false, db);
          accumulate(gs[1], db);
        }
      });
}

template <class T>
Var<T> transpose(Var<T> a) {
  const BasicTensor<T>& av = a.value();
  const std::size_t m = av.rows(), n = av.cols();
  BasicTensor<T> out = BasicTensor<T>::matrix(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = av(i, j);
  return a.tape->record(
      "transpose", std::move(out), {a.id},
      [m, n](const Tape<T>&, const typename Tape<T>::Node&,
             const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        if (!gs[0]) return;
        auto& d = *gs[0];
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) d[i * n + j] += g(j, i);
      });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "add");
  BasicTensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record(
      "add", std::move(out), {a.id, b.id},
      [](const Tape<T>&, const typename Tape<T>::Node&,
         const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        accumulate(gs[0], g);
        accumulate(gs[1], g);
      });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "sub");
  BasicTensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape->record(
      "sub", std::move(out), {a.id, b.id},
      [](const Tape<T>&, const typename Tape<T>::Node&,
         const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        accumulate(gs[0], g);
        if (gs[1]) {
          auto& d = *gs[1];
          for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
        }
      });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape(a, b, "mul");
  BasicTensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape->record(
      "mul", std::move(out), {a.id, b.id},
      [](const Tape<T>& tape, const typename Tape<T>::Node& n,
         const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        const auto& A = tape.value(n.inputs[0]);
        const auto& B = tape.value(n.inputs[1]);
        if (gs[0]) {
          auto& d = *gs[0];
          for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * B[i];
        }
        if (gs[1]) {
          auto& d = *gs[1];
          for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * A[i];
        }
      });
}

template <class T>
Var<T> add_row(Var<T> x, Var<T> b) {
  require_same_tape(x, b, "add_row");
  const auto& xv = x.value();
  const auto& bv = b.value();
  if (bv.size() != xv.cols()) {
    throw ShapeError("add_row: bias " + shape_str(bv.shape()) +
                     " does not match " + shape_str(xv.shape()));
  }
  BasicTensor<T> out = BasicTensor<T>::matrix(xv.rows(), xv.cols(),
                                              xv.values());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bv[j];
  return x.tape->record(
      "add_row", std::move(out), {x.id, b.id},
      [](const Tape<T>&, const typename Tape<T>::Node&,
         const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        accumulate(gs[0], g);
        if (gs[1]) {
          auto& d = *gs[1];
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) d[j] += g(i, j);
        }
      });
}

template <class T>
Var<T> mul_col(Var<T> x, Var<T> c) {
  require_same_tape(x, c, "mul_col");
  const auto& xv = x.value();
  const auto& cv = c.value();
  if (cv.size() != xv.rows()) {
    throw ShapeError("mul_col: column " + shape_str(cv.shape()) +
                     " does not match " + shape_str(xv.shape()));
  }
  BasicTensor<T> out = BasicTensor<T>::matrix(xv.rows(), xv.cols(),
                                              xv.values());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= cv[i];
  return x.tape->record(
      "mul_col", std::move(out), {x.id, c.id},
      [](const Tape<T>& tape, const typename Tape<T>::Node& n,
         const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        const auto& X = tape.value(n.inputs[0]);
        const auto& C = tape.value(n.inputs[1]);
        const std::size_t cols = g.cols();
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            if (gs[0]) (*gs[0])[i * cols + j] += g(i, j) * C[i];
            if (gs[1]) (*gs[1])[i] += g(i, j) * X[i * cols + j];
          }
        }
      });
}

template <class T>
Var<T> scale(Var<T> x, double s) {
  const T st = static_cast<T>(s);
  return unary<T>(
      "scale", x, [st](T v) { return v * st; }, [st](T, T) { return st; });
}

template <class T>
Var<T> scale_by(Var<T> x, Var<T> s) {
  require_same_tape(x, s, "scale_by");
  const T sv = s.value().item();
  BasicTensor<T> out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= sv;
  return x.tape->record(
      "scale_by", std::move(out), {x.id, s.id},
      [](const Tape<T>& tape, const typename Tape<T>::Node& n,
         const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        const auto& X = tape.value(n.inputs[0]);
        const T S = tape.value(n.inputs[1]).item();
        if (gs[0]) {
          auto& d = *gs[0];
          for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * S;
        }
        if (gs[1]) {
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i)
            acc += static_cast<double>(g[i]) * static_cast<double>(X[i]);
          (*gs[1])[0] += static_cast<T>(acc);
        }
      });
}

template <class T>
Var<T> exp(Var<T> x) {
  return unary<T>(
      "exp", x, [](T v) { return std::exp(v); }, [](T, T y) { return y; });
}

template <class T>
Var<T> one_minus(Var<T> x) {
  return unary<T>(
      "one_minus", x, [](T v) { return T{1} - v; }, [](T, T) { return T{-1}; });
}

template <class T>
Var<T> sigmoid(Var<T> x) {
  return unary<T>(
      "sigmoid", x, [](T v) { return stable_sigmoid(v); },
      [](T, T y) { return y * (T{1} - y); });
}

template <class T>
Var<T> relu(Var<T> x) {
  return unary<T>(
      "relu", x, [](T v) { return v > T{0} ? v : T{0}; },
      [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <class T>
Var<T> gelu(Var<T> x) {
  constexpr T inv_sqrt2 = static_cast<T>(0.70710678118654752440);
  constexpr T inv_sqrt2pi = static_cast<T>(0.39894228040143267794);
  return unary<T>(
      "gelu", x,
      [](T v) { return T{0.5} * v * (T{1} + std::erf(v * inv_sqrt2)); },
      [](T v, T) {
        const T cdf = T{0.5} * (T{1} + std::erf(v * inv_sqrt2));
        return cdf + v * inv_sqrt2pi * std::exp(T{-0.5} * v * v);
      });
}

namespace {

template <class T>
void softmax_row(std::span<const T> in, std::span<T> out) {
  T mx = -std::numeric_limits<T>::infinity();
  for (const T v : in) mx = std::max(mx, v);
  double denom = 0.0;
  for (std::size_t j = 0; j < in.size(); ++j) {
    const double e = std::exp(static_cast<double>(in[j] - mx));
    out[j] = static_cast<T>(e);
    denom += e;
  }
  for (auto& v : out) v = static_cast<T>(static_cast<double>(v) / denom);
}

// d_in = y ⊙ (d_out - <d_out, y>) for one softmax row.
template <class T>
void softmax_row_backward(std::span<const T> y, std::span<const T> dy,
                          std::span<T> dx) {
  double dot = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j)
    dot += static_cast<double>(dy[j]) * static_cast<double>(y[j]);
  for (std::size_t j = 0; j < y.size(); ++j)
    dx[j] += static_cast<T>(static_cast<double>(y[j]) *
                            (static_cast<double>(dy[j]) - dot));
}

}  // namespace

template <class T>
Var<T> softmax_rows(Var<T> x) {
  const auto& xv = x.value();
  BasicTensor<T> y = BasicTensor<T>::matrix(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i) softmax_row(xv.row(i), y.row(i));
  return x.tape->record(
      "softmax_rows", std::move(y), {x.id},
      [](const Tape<T>&, const typename Tape<T>::Node& n,
         const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        if (!gs[0]) return;
        for (std::size_t i = 0; i < g.rows(); ++i)
          softmax_row_backward(n.value.row(i), g.row(i), gs[0]->row(i));
      });
}

template <class T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, double eps) {
  require_same_tape(x, gain, "layer_norm");
  require_same_tape(x, bias, "layer_norm");
  const auto& xv = x.value();
  const std::size_t m = xv.rows(), d = xv.cols();
  if (gain.value().size() != d || bias.value().size() != d) {
    throw ShapeError("layer_norm: gain/bias must have " + std::to_string(d) +
                     " elements");
  }
  if (!(eps > 0.0)) throw ContractError("layer_norm: eps must be positive");
  // xhat and 1/sigma are saved for backward.
  auto xhat = std::make_shared<BasicTensor<T>>(BasicTensor<T>::matrix(m, d));
  auto inv_sigma = std::make_shared<std::vector<double>>(m);
  BasicTensor<T> y = BasicTensor<T>::matrix(m, d);
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  for (std::size_t i = 0; i < m; ++i) {
    const auto row = xv.row(i);
    double mean = 0.0;
    for (const T v : row) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (const T v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = static_cast<T>((row[j] - mean) * is);
      (*xhat)(i, j) = h;
      y(i, j) = h * gv[j] + bv[j];
    }
  }
  return x.tape->record(
      "layer_norm", std::move(y), {x.id, gain.id, bias.id},
      [xhat, inv_sigma](const Tape<T>& tape, const typename Tape<T>::Node& n,
                        const BasicTensor<T>& g,
                        std::vector<BasicTensor<T>*>& gs) {
        const auto& G = tape.value(n.inputs[1]);
        const std::size_t rows = g.rows(), d = g.cols();
        for (std::size_t i = 0; i < rows; ++i) {
          if (gs[0]) {
            double mean_dh = 0.0, mean_dh_h = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = static_cast<double>(g(i, j)) * G[j];
              mean_dh += dh;
              mean_dh_h += dh * (*xhat)(i, j);
            }
            mean_dh /= static_cast<double>(d);
            mean_dh_h /= static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) {
              const double dh = static_cast<double>(g(i, j)) * G[j];
              (*gs[0])[i * d + j] += static_cast<T>(
                  (*inv_sigma)[i] * (dh - mean_dh - (*xhat)(i, j) * mean_dh_h));
            }
          }
          for (std::size_t j = 0; j < d; ++j) {
            if (gs[1]) (*gs[1])[j] += g(i, j) * (*xhat)(i, j);
            if (gs[2]) (*gs[2])[j] += g(i, j);
          }
        }
      });
}

template <class T>
Var<T> concat_cols(Var<T> a, Var<T> b) {
  require_same_tape(a, b, "concat_cols");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols: row counts differ for " +
                     shape_str(av.shape()) + " and " + shape_str(bv.shape()));
  }
  const std::size_t m = av.rows(), na = av.cols(), nb = bv.cols();
  BasicTensor<T> out = BasicTensor<T>::matrix(m, na + nb);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(av.row(i).begin(), av.row(i).end(), out.row(i).begin());
    std::copy(bv.row(i).begin(), bv.row(i).end(), out.row(i).begin() + na);
  }
  return a.tape->record(
      "concat_cols", std::move(out), {a.id, b.id},
      [na, nb](const Tape<T>&, const typename Tape<T>::Node&,
               const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < na; ++j)
            if (gs[0]) (*gs[0])[i * na + j] += g(i, j);
          for (std::size_t j = 0; j < nb; ++j)
            if (gs[1]) (*gs[1])[i * nb + j] += g(i, na + j);
        }
      });
}

template <class T>
Var<T> mean_groups(Var<T> x, std::size_t group_len) {
  const auto& xv = x.value();
  if (group_len == 0 || xv.rows() % group_len != 0) {
    throw ShapeError("mean_groups: " + std::to_string(xv.rows()) +
                     " rows are not a multiple of group length " +
                     std::to_string(group_len));
  }
  const std::size_t groups = xv.rows() / group_len, d = xv.cols();
  BasicTensor<T> out = BasicTensor<T>::matrix(groups, d);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < group_len; ++l) acc += xv(gi * group_len + l, j);
      out(gi, j) = static_cast<T>(acc / static_cast<double>(group_len));
    }
  }
  return x.tape->record(
      "mean_groups", std::move(out), {x.id},
      [group_len, d](const Tape<T>&, const typename Tape<T>::Node&,
                     const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        if (!gs[0]) return;
        const T w = T{1} / static_cast<T>(group_len);
        for (std::size_t gi = 0; gi < g.rows(); ++gi)
          for (std::size_t l = 0; l < group_len; ++l)
            for (std::size_t j = 0; j < d; ++j)
              (*gs[0])[(gi * group_len + l) * d + j] += g(gi, j) * w;
      });
}

template <class T>
Var<T> row_normalize(Var<T> x, double min_norm) {
  const auto& xv = x.value();
  const std::size_t m = xv.rows(), d = xv.cols();
  auto norms = std::make_shared<std::vector<double>>(m);
  BasicTensor<T> y = BasicTensor<T>::matrix(m, d);
  for (std::size_t i = 0; i < m; ++i) {
    double ss = 0.0;
    for (const T v : xv.row(i)) ss += static_cast<double>(v) * v;
    const double nrm = std::sqrt(ss);
    if (nrm < min_norm) {
      throw DomainError("row_normalize: row " + std::to_string(i) +
                        " has norm below " + std::to_string(min_norm));
    }
    (*norms)[i] = nrm;
    for (std::size_t j = 0; j < d; ++j)
      y(i, j) = static_cast<T>(xv(i, j) / nrm);
  }
  return x.tape->record(
      "row_normalize", std::move(y), {x.id},
      [norms](const Tape<T>&, const typename Tape<T>::Node& n,
              const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        if (!gs[0]) return;
        const std::size_t d = g.cols();
        for (std::size_t i = 0; i < g.rows(); ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j)
            dot += static_cast<double>(g(i, j)) * n.value(i, j);
          for (std::size_t j = 0; j < d; ++j)
            (*gs[0])[i * d + j] += static_cast<T>(
                (g(i, j) - n.value(i, j) * dot) / (*norms)[i]);
        }
      });
}

template <class T>
Var<T> sum(Var<T> x) {
  double acc = 0.0;
  for (const T v : x.value().data()) acc += v;
  return x.tape->record(
      "sum", BasicTensor<T>::scalar(static_cast<T>(acc)), {x.id},
      [](const Tape<T>&, const typename Tape<T>::Node&,
         const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        if (!gs[0]) return;
        const T gv = g.item();
        for (auto& v : gs[0]->data()) v += gv;
      });
}

template <class T>
Var<T> attention(Var<T> q, Var<T> k, Var<T> v, std::size_t heads,
                 std::size_t lq, std::size_t lk) {
  require_same_tape(q, k, "attention");
  require_same_tape(q, v, "attention");
  const auto& Q = q.value();
  const auto& K = k.value();
  const auto& V = v.value();
  const std::size_t d = Q.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention: width " + std::to_string(d) +
                      " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  if (K.cols() != d || V.cols() != d || K.rows() != V.rows()) {
    throw ShapeError("attention: q " + shape_str(Q.shape()) + ", k " +
                     shape_str(K.shape()) + ", v " + shape_str(V.shape()));
  }
  if (lq == 0 || lk == 0 || Q.rows() % lq != 0 || K.rows() % lk != 0 ||
      Q.rows() / lq != K.rows() / lk) {
    throw ShapeError("attention: token lengths do not tile the inputs");
  }
  const std::size_t groups = Q.rows() / lq;
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Attention weights, laid out [group][head][lq][lk], kept for backward.
  auto weights = std::make_shared<std::vector<T>>(groups * heads * lq * lk);
  BasicTensor<T> out = BasicTensor<T>::matrix(Q.rows(), d);
  std::vector<T> logits(lk);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < lq; ++i) {
        const std::size_t qi = gi * lq + i;
        for (std::size_t j = 0; j < lk; ++j) {
          const std::size_t kj = gi * lk + j;
          double dot = 0.0;
          for (std::size_t c = h * dh; c < (h + 1) * dh; ++c)
            dot += static_cast<double>(Q(qi, c)) * K(kj, c);
          logits[j] = static_cast<T>(dot * scale);
        }
        std::span<T> w(weights->data() + ((gi * heads + h) * lq + i) * lk, lk);
        softmax_row<T>(logits, w);
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < lk; ++j)
            acc += static_cast<double>(w[j]) * V(gi * lk + j, c);
          out(qi, c) = static_cast<T>(acc);
        }
      }
    }
  }
  return q.tape->record(
      "attention", std::move(out), {q.id, k.id, v.id},
      [weights, groups, heads, lq, lk, dh, scale](
          const Tape<T>& tape, const typename Tape<T>::Node& n,
          const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        const auto& Q = tape.value(n.inputs[0]);
        const auto& K = tape.value(n.inputs[1]);
        const auto& V = tape.value(n.inputs[2]);
        const std::size_t d = Q.cols();
        std::vector<T> dw(lk), ds(lk);
        for (std::size_t gi = 0; gi < groups; ++gi) {
          for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t i = 0; i < lq; ++i) {
              const std::size_t qi = gi * lq + i;
              std::span<const T> w(
                  weights->data() + ((gi * heads + h) * lq + i) * lk, lk);
              // dW_j = <dO_i, V_j>; dV_j += w_j dO_i.
              for (std::size_t j = 0; j < lk; ++j) {
                const std::size_t kj = gi * lk + j;
                double acc = 0.0;
                for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
                  acc += static_cast<double>(g(qi, c)) * V(kj, c);
                  if (gs[2]) (*gs[2])[kj * d + c] += w[j] * g(qi, c);
                }
                dw[j] = static_cast<T>(acc);
              }
              std::fill(ds.begin(), ds.end(), T{0});
              softmax_row_backward<T>(w, dw, ds);
              for (std::size_t j = 0; j < lk; ++j) {
                const std::size_t kj = gi * lk + j;
                const T sj = static_cast<T>(ds[j] * scale);
                if (sj == T{0}) continue;
                for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) {
                  if (gs[0]) (*gs[0])[qi * d + c] += sj * K(kj, c);
                  if (gs[1]) (*gs[1])[kj * d + c] += sj * Q(qi, c);
                }
              }
            }
          }
        }
      });
}

template <class T>
Var<T> diag_cross_entropy(Var<T> s) {
  const auto& S = s.value();
  const std::size_t n = S.rows();
  if (S.rank() != 2 || S.cols() != n || n == 0) {
    throw ShapeError("diag_cross_entropy: expected a non-empty square matrix, got " +
                     shape_str(S.shape()));
  }
  // Row softmax saved for backward.
  auto probs = std::make_shared<std::vector<double>>(n * n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, static_cast<double>(S(i, j)));
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += std::exp(S(i, j) - mx);
    const double lse = mx + std::log(acc);
    for (std::size_t j = 0; j < n; ++j)
      (*probs)[i * n + j] = std::exp(S(i, j) - lse);
    total += lse - static_cast<double>(S(i, i));
  }
  const double loss = total / static_cast<double>(n);
  return s.tape->record(
      "diag_cross_entropy", BasicTensor<T>::scalar(static_cast<T>(loss)), {s.id},
      [probs, n](const Tape<T>&, const typename Tape<T>::Node&,
                 const BasicTensor<T>& g, std::vector<BasicTensor<T>*>& gs) {
        if (!gs[0]) return;
        const double gv = static_cast<double>(g.item()) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            (*gs[0])[i * n + j] += static_cast<T>(
                gv * ((*probs)[i * n + j] - (i == j ? 1.0 : 0.0)));
      });
}

// ---- instantiations ----------------------------------------------------------

#define TIGER_INSTANTIATE_AD(T)                                               \
  template class Tape<T>;                                                     \
  template Var<T> matmul(Var<T>, Var<T>);                                     \
  template Var<T> transpose(Var<T>);                                          \
  template Var<T> add(Var<T>, Var<T>);                                        \
  template Var<T> sub(Var<T>, Var<T>);                                        \
  template Var<T> mul(Var<T>, Var<T>);                                        \
  template Var<T> add_row(Var<T>, Var<T>);                                    \
  template Var<T> mul_col(Var<T>, Var<T>);                                    \
  template Var<T> scale(Var<T>, double);                                      \
  template Var<T> scale_by(Var<T>, Var<T>);                                   \
  template Var<T> exp(Var<T>);                                                \
  template Var<T> one_minus(Var<T>);                                          \
  template Var<T> sigmoid(Var<T>);                                            \
  template Var<T> relu(Var<T>);                                               \
  template Var<T> gelu(Var<T>);                                               \
  template Var<T> softmax_rows(Var<T>);                                       \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, double);                 \
  template Var<T> concat_cols(Var<T>, Var<T>);                                \
  template Var<T> mean_groups(Var<T>, std::size_t);                           \
  template Var<T> row_normalize(Var<T>, double);                              \
  template Var<T> sum(Var<T>);                                                \
  template Var<T> attention(Var<T>, Var<T>, Var<T>, std::size_t, std::size_t, \
                            std::size_t);                                     \
  template Var<T> diag_cross_entropy(Var<T>);

TIGER_INSTANTIATE_AD(float)
TIGER_INSTANTIATE_AD(double)

#undef TIGER_INSTANTIATE_AD

}  // namespace tiger
