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

#include "tiger/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tiger {

namespace {

std::vector<double> unit_rows(const Tensor& x, const char* what) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (std::size_t k = 0; k < d; ++k) ss += static_cast<double>(x(i, k)) * x(i, k);
    const double norm = std::sqrt(ss);
    if (!(norm >= 1e-12)) {
      throw DomainError(std::string("similarity_matrix: ") + what + " row " +
                        std::to_string(i) + " has norm below 1e-12");
    }
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] = x(i, k) / norm;
  }
  return out;
}

void require_square(const Tensor& s, const char* op) {
  if (s.rank() != 2 || s.rows() != s.cols() || s.rows() == 0) {
    throw ShapeError(std::string(op) + ": expected a non-empty square matrix, got " +
                     shape_str(s.shape()));
  }
}

// -log softmax(v)[target] with max subtraction; `at(k)` reads entry k of the
// vector.
template <class At>
double nll(std::size_t n, std::size_t target, At at) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, at(k));
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += std::exp(at(k) - mx);
  return std::log(acc) + mx - at(target);
}

}  // namespace

Tensor similarity_matrix(const Tensor& e, const Tensor& r, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw DomainError("similarity_matrix: tau must be positive and finite");
  }
  if (e.cols() != r.cols()) {
    throw ShapeError("similarity_matrix: widths differ, " + shape_str(e.shape()) +
                     " vs " + shape_str(r.shape()));
  }
  const std::vector<double> eu = unit_rows(e, "enzyme");
  const std::vector<double> ru = unit_rows(r, "reaction");
  const std::size_t n = e.rows(), m = r.rows(), d = e.cols();
  Tensor s = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += eu[i * d + k] * ru[j * d + k];
      s(i, j) = static_cast<float>(acc / tau);
    }
  }
  return s;
}

double loss_e2r(const Tensor& s) {
  require_square(s, "loss_e2r");
  const std::size_t n = s.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += nll(n, i, [&](std::size_t j) { return static_cast<double>(s(i, j)); });
  }
  return total / static_cast<double>(n);
}

double loss_r2e(const Tensor& s) {
  require_square(s, "loss_r2e");
  const std::size_t n = s.rows();
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    total += nll(n, j, [&](std::size_t i) { return static_cast<double>(s(i, j)); });
  }
  return total / static_cast<double>(n);
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ConfigError("gamma must lie in [0, 1], got " + std::to_string(gamma));
  }
}

double retrieval_loss(const Tensor& s, double gamma) {
  check_gamma(gamma);
  return gamma * loss_e2r(s) + (1.0 - gamma) * loss_r2e(s);
}

template <class T>
Var<T> similarity(Var<T> e, Var<T> r, Var<T> log_tau) {
  Var<T> cos = matmul(row_normalize(e), transpose(row_normalize(r)));
  return scale_by(cos, exp(scale(log_tau, -1.0)));
}

template <class T>
Var<T> loss_e2r(Var<T> s) {
  return diag_cross_entropy(s);
}

template <class T>
Var<T> loss_r2e(Var<T> s) {
  return diag_cross_entropy(transpose(s));
}

template <class T>
Var<T> retrieval_loss(Var<T> s, double gamma) {
  check_gamma(gamma);
  return add(scale(loss_e2r(s), gamma), scale(loss_r2e(s), 1.0 - gamma));
}

#define TIGER_INSTANTIATE_CONTRASTIVE(T)                \
  template Var<T> similarity(Var<T>, Var<T>, Var<T>);   \
  template Var<T> loss_e2r(Var<T>);                     \
  template Var<T> loss_r2e(Var<T>);                     \
  template Var<T> retrieval_loss(Var<T>, double);

TIGER_INSTANTIATE_CONTRASTIVE(float)
TIGER_INSTANTIATE_CONTRASTIVE(double)

#undef TIGER_INSTANTIATE_CONTRASTIVE

}  // namespace tiger
