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

// Define-by-run reverse-mode differentiation over BasicTensor.
//
// A Tape records one forward pass. Every op appends a node holding its value
// and a closure that maps the node's output gradient onto its inputs. Nodes
// are append-only, so input ids always precede their consumer and the tape is
// a topological order by construction.
//
// The engine is instantiated for float (training) and double (the
// finite-difference oracle and its analytic counterpart).

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tiger/tensor.hpp"

namespace tiger {

template <class T>
class Tape;

// Handle to a node on a tape. Cheap to copy.
template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const BasicTensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Gradient of the loss with respect to each named parameter. Every parameter
// registered on the tape appears, zero-filled when it is off the loss path.
template <class T>
using GradMap = std::map<std::string, BasicTensor<T>>;

template <class T>
class Tape {
 public:
  struct Node;
  // Receives the node's output gradient and one accumulator per input
  // (nullptr when that input does not need a gradient). Closures add into
  // the accumulators.
  using BackwardFn = std::function<void(const Tape&, const Node&,
                                        const BasicTensor<T>& grad_out,
                                        std::vector<BasicTensor<T>*>& grads)>;

  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    BasicTensor<T> value;
    bool needs_grad = false;
    std::string param_name;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(BasicTensor<T> value);
  // Trainable leaf. Names are unique per tape.
  Var<T> param(const std::string& name, BasicTensor<T> value);

  // Appends an op node. Throws NumericError when `value` is not finite.
  Var<T> record(std::string_view op, BasicTensor<T> value,
                std::vector<std::size_t> inputs, BackwardFn backward);

  // Gradients of a scalar node with respect to every parameter leaf. Does not
  // modify the tape, so repeated calls return identical maps.
  GradMap<T> backward(Var<T> loss) const;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const;
  const BasicTensor<T>& value(std::size_t id) const { return node(id).value; }
  bool needs_grad(std::size_t id) const { return node(id).needs_grad; }

 private:
  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> params_;
};

template <class T>
const BasicTensor<T>& Var<T>::value() const {
  if (tape == nullptr) throw StructuralError("unbound Var");
  return tape->value(id);
}

template <class T>
GradMap<T> backward(Var<T> loss) {
  return loss.tape->backward(loss);
}

// ---- ops -------------------------------------------------------------------
// Every op treats rank-0/1 inputs through the matrix view of BasicTensor
// (a vector is one row). Outputs are rank-2 unless stated.

template <class T> Var<T> matmul(Var<T> a, Var<T> b);
template <class T> Var<T> transpose(Var<T> a);
template <class T> Var<T> add(Var<T> a, Var<T> b);
template <class T> Var<T> sub(Var<T> a, Var<T> b);
template <class T> Var<T> mul(Var<T> a, Var<T> b);
// x[m×n] + b broadcast over rows; b has n elements.
template <class T> Var<T> add_row(Var<T> x, Var<T> b);
// x[m×n] ⊙ c broadcast over columns; c is m×1.
template <class T> Var<T> mul_col(Var<T> x, Var<T> c);
template <class T> Var<T> scale(Var<T> x, double s);
// x * s where s is a one-element node.
template <class T> Var<T> scale_by(Var<T> x, Var<T> s);
template <class T> Var<T> exp(Var<T> x);
template <class T> Var<T> one_minus(Var<T> x);
template <class T> Var<T> sigmoid(Var<T> x);
template <class T> Var<T> relu(Var<T> x);
// Exact (erf) GELU.
template <class T> Var<T> gelu(Var<T> x);
template <class T> Var<T> softmax_rows(Var<T> x);
template <class T> Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias,
                                     double eps = 1e-5);
template <class T> Var<T> concat_cols(Var<T> a, Var<T> b);
// Mean over consecutive blocks of `group_len` rows: [B·L×d] -> [B×d].
template <class T> Var<T> mean_groups(Var<T> x, std::size_t group_len);
// Rows scaled to unit L2 norm. Throws DomainError naming the row when a norm
// falls below `min_norm`.
template <class T> Var<T> row_normalize(Var<T> x, double min_norm = 1e-12);
// Sum of all elements, rank-0 result.
template <class T> Var<T> sum(Var<T> x);
// Grouped multi-head scaled dot-product attention over already projected
// q [B·lq×d], k, v [B·lk×d]. Each of the B groups attends only within itself:
// per head h, A = softmax(Q_h K_hᵀ / sqrt(d/heads)), out_h = A V_h, and the
// heads are concatenated along columns.
template <class T> Var<T> attention(Var<T> q, Var<T> k, Var<T> v,
                                    std::size_t heads, std::size_t lq,
                                    std::size_t lk);
// -(1/N) Σ_i log softmax(S_i)_i for square S, rank-0 result. Log-sum-exp is
// accumulated in double with max subtraction.
template <class T> Var<T> diag_cross_entropy(Var<T> s);

}  // namespace tiger
