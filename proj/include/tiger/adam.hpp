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

// Adam with bias correction. Moments are kept in double; the update is
// computed in double and rounded once into the parameter.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "tiger/params.hpp"

namespace tiger {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  std::map<std::string, Tensor64> m;
  std::map<std::string, Tensor64> v;
};

// Scales every gradient by min(1, max_norm / ‖g‖₂) over the whole map.
// Returns the pre-clip global norm.
template <class T>
double clip_global_norm(GradMap<T>& grads, double max_norm) {
  double ss = 0.0;
  for (const auto& [name, g] : grads)
    for (const T x : g.data()) ss += static_cast<double>(x) * x;
  const double norm = std::sqrt(ss);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [name, g] : grads)
      for (T& x : g.data()) x = static_cast<T>(x * f);
  }
  return norm;
}

// One update of every tensor visited in `params`. Moments are created on
// first sight; a gradient or moment whose shape disagrees with its parameter,
// or a missing gradient, throws StateError.
template <class P, class T>
void adam_step(P& params, const GradMap<T>& grads, AdamState& state,
               const AdamConfig& cfg) {
  const std::uint64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  visit_params(params, [&](const std::string& name, BasicTensor<T>& p) {
    const auto git = grads.find(name);
    if (git == grads.end()) throw StateError("adam: no gradient for '" + name + "'");
    const BasicTensor<T>& g = git->second;
    if (g.shape() != p.shape()) {
      throw StateError("adam: gradient for '" + name + "' has shape " +
                       shape_str(g.shape()) + ", parameter has " + shape_str(p.shape()));
    }
    auto [mit, m_new] = state.m.try_emplace(name, Tensor64(p.shape()));
    auto [vit, v_new] = state.v.try_emplace(name, Tensor64(p.shape()));
    Tensor64& m = mit->second;
    Tensor64& v = vit->second;
    if (m.shape() != p.shape() || v.shape() != p.shape()) {
      throw StateError("adam: moment shape for '" + name + "' does not match " +
                       shape_str(p.shape()));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] = static_cast<T>(p[i] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  });
  state.step = t;
}

}  // namespace tiger
