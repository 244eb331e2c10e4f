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

// Temperature-scaled cosine similarity and the bidirectional InfoNCE loss.
//
//   s_ij   = cos(e_i, r_j) / tau
//   L_e2r  = -(1/N) Σ_i log softmax_j(s_ij)[i]     (row-wise)
//   L_r2e  = -(1/N) Σ_j log softmax_i(s_ij)[j]     (column-wise)
//   L_r    = gamma·L_e2r + (1 - gamma)·L_r2e
//
// Plain-tensor versions accumulate in double and serve evaluation and the
// tests; tape versions drive training.

#include "tiger/autodiff.hpp"

namespace tiger {

// Normalized rows of E times normalized rows of R, over tau. Accumulated in
// double. Throws DomainError naming the row when a norm is below 1e-12, and
// DomainError when tau is not positive.
Tensor similarity_matrix(const Tensor& e, const Tensor& r, double tau);

// Throw ShapeError unless S is square and non-empty.
double loss_e2r(const Tensor& s);
// Column-wise mirror of loss_e2r, with the same accumulation order, so that
// loss_r2e(S) == loss_e2r(Sᵀ) bit for bit.
double loss_r2e(const Tensor& s);
// ConfigError when gamma is outside [0, 1].
double retrieval_loss(const Tensor& s, double gamma);

void check_gamma(double gamma);

template <class T>
Var<T> similarity(Var<T> e, Var<T> r, Var<T> log_tau);
template <class T>
Var<T> loss_e2r(Var<T> s);
template <class T>
Var<T> loss_r2e(Var<T> s);
template <class T>
Var<T> retrieval_loss(Var<T> s, double gamma);

}  // namespace tiger
