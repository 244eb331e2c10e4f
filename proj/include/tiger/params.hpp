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

// Parameter blocks shared by the fusion network and the projectors, plus the
// Binder that lifts them onto a Tape.
//
// Every block exposes `static void visit(Self&, prefix, fn)` which calls
// fn(name, tensor) for each trainable tensor in a fixed order. That order is
// the checkpoint order and the optimizer-state order.

#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <unordered_map>

#include "tiger/autodiff.hpp"
#include "tiger/rng.hpp"

namespace tiger {

enum class Activation { relu, gelu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Two-layer feed-forward block: act(x·W1 + b1)·W2 + b2.
template <class T>
struct FfnParams {
  BasicTensor<T> w1, b1, w2, b2;
  Activation activation = Activation::relu;

  std::size_t in_dim() const { return w1.rows(); }
  std::size_t out_dim() const { return w2.cols(); }

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    f(prefix + "w1", self.w1);
    f(prefix + "b1", self.b1);
    f(prefix + "w2", self.w2);
    f(prefix + "b2", self.b2);
  }
};

// Multi-head attention projections (no biases).
template <class T>
struct MhaParams {
  std::size_t heads = 1;
  BasicTensor<T> wq, wk, wv, wo;

  std::size_t width() const { return wq.rows(); }

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    f(prefix + "wq", self.wq);
    f(prefix + "wk", self.wk);
    f(prefix + "wv", self.wv);
    f(prefix + "wo", self.wo);
  }
};

template <class P, class F>
void visit_params(P& params, const std::string& prefix, F&& f) {
  std::remove_const_t<P>::visit(params, prefix, f);
}
template <class P, class F>
void visit_params(P& params, F&& f) {
  visit_params(params, std::string(), std::forward<F>(f));
}

// Same block with every tensor converted to scalar type U.
template <class U, class P>
auto cast_params(const P& params);

// ---- initialisation ----------------------------------------------------------

// Uniform(-1/sqrt(rows), +1/sqrt(rows)) for a rows×cols weight.
Tensor init_weight(CounterRng& rng, std::size_t rows, std::size_t cols);
FfnParams<float> init_ffn(CounterRng& rng, std::size_t in, std::size_t hidden,
                          std::size_t out, Activation act);
MhaParams<float> init_mha(CounterRng& rng, std::size_t width,
                          std::size_t heads);

// ---- Binder ------------------------------------------------------------------

// Registers parameter tensors on a tape and hands out their Vars by tensor
// address. In trainable mode tensors become named parameter leaves (and so
// appear in the GradMap); otherwise they are constants. The bound blocks must
// outlive the Binder and must not move while it is in use.
template <class T>
class Binder {
 public:
  explicit Binder(Tape<T>& tape, bool trainable = true)
      : tape_(&tape), trainable_(trainable) {}

  Var<T> bind(const std::string& name, const BasicTensor<T>& t) {
    if (auto it = vars_.find(&t); it != vars_.end()) return it->second;
    Var<T> v = trainable_ ? tape_->param(name, t) : tape_->constant(t);
    vars_.emplace(&t, v);
    return v;
  }

  template <class P>
  void bind_all(const P& params, const std::string& prefix = "") {
    visit_params(params, prefix, [this](const std::string& name,
                                        const BasicTensor<T>& t) {
      bind(name, t);
    });
  }

  Var<T> operator()(const BasicTensor<T>& t) const {
    auto it = vars_.find(&t);
    if (it == vars_.end()) {
      throw StructuralError("parameter tensor was not bound to the tape");
    }
    return it->second;
  }

  Var<T> constant(BasicTensor<T> t) const { return tape_->constant(std::move(t)); }
  Tape<T>& tape() const { return *tape_; }
  bool trainable() const { return trainable_; }

 private:
  Tape<T>* tape_;
  bool trainable_;
  std::unordered_map<const BasicTensor<T>*, Var<T>> vars_;
};

// act(x·W1 + b1)·W2 + b2 over the rows of x.
template <class T>
Var<T> ffn_forward(const Binder<T>& b, const FfnParams<T>& p, Var<T> x);

// Projects q_src with W_Q and kv_src with W_K / W_V, runs grouped attention
// (lq query tokens and lk key tokens per item) and applies W_O.
template <class T>
Var<T> mha_forward(const Binder<T>& b, const MhaParams<T>& p, Var<T> q_src,
                   Var<T> kv_src, std::size_t lq = 1, std::size_t lk = 1);

// ---- cast implementation -----------------------------------------------------

template <class U, class T>
FfnParams<U> cast_block(const FfnParams<T>& p) {
  return {p.w1.template cast<U>(), p.b1.template cast<U>(),
          p.w2.template cast<U>(), p.b2.template cast<U>(), p.activation};
}
template <class U, class T>
MhaParams<U> cast_block(const MhaParams<T>& p) {
  return {p.heads, p.wq.template cast<U>(), p.wk.template cast<U>(),
          p.wv.template cast<U>(), p.wo.template cast<U>()};
}

template <class U, class P>
auto cast_params(const P& params) {
  return cast_block<U>(params);
}

}  // namespace tiger
