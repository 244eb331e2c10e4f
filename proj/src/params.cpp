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

#include "tiger/params.hpp"

namespace tiger {

std::string to_string(Activation a) {
  return a == Activation::relu ? "relu" : "gelu";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "gelu") return Activation::gelu;
  throw ConfigError("unknown activation '" + s + "' (expected relu|gelu)");
}

Tensor init_weight(CounterRng& rng, std::size_t rows, std::size_t cols) {
  Tensor w = Tensor::matrix(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  for (auto& v : w.data()) v = static_cast<float>(rng.uniform(-bound, bound));
  return w;
}

FfnParams<float> init_ffn(CounterRng& rng, std::size_t in, std::size_t hidden,
                          std::size_t out, Activation act) {
  FfnParams<float> p;
  p.w1 = init_weight(rng, in, hidden);
  p.b1 = Tensor(Shape{hidden});
  p.w2 = init_weight(rng, hidden, out);
  p.b2 = Tensor(Shape{out});
  p.activation = act;
  return p;
}

MhaParams<float> init_mha(CounterRng& rng, std::size_t width,
                          std::size_t heads) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("attention width " + std::to_string(width) +
                      " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  MhaParams<float> p;
  p.heads = heads;
  p.wq = init_weight(rng, width, width);
  p.wk = init_weight(rng, width, width);
  p.wv = init_weight(rng, width, width);
  p.wo = init_weight(rng, width, width);
  return p;
}

template <class T>
Var<T> ffn_forward(const Binder<T>& b, const FfnParams<T>& p, Var<T> x) {
  if (x.cols() != p.in_dim()) {
    throw ShapeError("ffn: input width " + std::to_string(x.cols()) +
                     " does not match W1 " + shape_str(p.w1.shape()));
  }
  Var<T> h = add_row(matmul(x, b(p.w1)), b(p.b1));
  h = p.activation == Activation::relu ? relu(h) : gelu(h);
  return add_row(matmul(h, b(p.w2)), b(p.b2));
}

template <class T>
Var<T> mha_forward(const Binder<T>& b, const MhaParams<T>& p, Var<T> q_src,
                   Var<T> kv_src, std::size_t lq, std::size_t lk) {
  if (q_src.cols() != p.width() || kv_src.cols() != p.width()) {
    throw ShapeError("mha: inputs of width " + std::to_string(q_src.cols()) +
                     " / " + std::to_string(kv_src.cols()) +
                     " do not match attention width " +
                     std::to_string(p.width()));
  }
  Var<T> q = matmul(q_src, b(p.wq));
  Var<T> k = matmul(kv_src, b(p.wk));
  Var<T> v = matmul(kv_src, b(p.wv));
  return matmul(attention(q, k, v, p.heads, lq, lk), b(p.wo));
}

template Var<float> ffn_forward(const Binder<float>&, const FfnParams<float>&,
                                Var<float>);
template Var<double> ffn_forward(const Binder<double>&,
                                 const FfnParams<double>&, Var<double>);
template Var<float> mha_forward(const Binder<float>&, const MhaParams<float>&,
                                Var<float>, Var<float>, std::size_t,
                                std::size_t);
template Var<double> mha_forward(const Binder<double>&,
                                 const MhaParams<double>&, Var<double>,
                                 Var<double>, std::size_t, std::size_t);

}  // namespace tiger
