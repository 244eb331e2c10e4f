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

// Shared-space projectors. The structure-shared projector is
//   phi(x) = LayerNorm(MHSA(FFN(x) + x·W_res))
// with single-token self-attention per item. Enzyme and reaction branches use
// the same architecture and separate parameters.

#include <string>

#include "tiger/params.hpp"

namespace tiger {

enum class ProjectorChoice { ssfp, mlp2, none };

std::string to_string(ProjectorChoice p);
ProjectorChoice projector_from_string(const std::string& s);

template <class T>
struct SsfpParams {
  FfnParams<T> ffn;
  BasicTensor<T> w_res;
  MhaParams<T> mhsa;
  BasicTensor<T> ln_gain, ln_bias;

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    FfnParams<T>::visit(self.ffn, prefix + "ffn.", f);
    f(prefix + "w_res", self.w_res);
    MhaParams<T>::visit(self.mhsa, prefix + "mhsa.", f);
    f(prefix + "ln_gain", self.ln_gain);
    f(prefix + "ln_bias", self.ln_bias);
  }
};

// One projector branch. Only the block matching `choice` is populated.
template <class T>
struct ProjectorParams {
  ProjectorChoice choice = ProjectorChoice::ssfp;
  SsfpParams<T> ssfp;
  FfnParams<T> mlp;

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    if (self.choice == ProjectorChoice::ssfp) {
      SsfpParams<T>::visit(self.ssfp, prefix + "ssfp.", f);
    } else if (self.choice == ProjectorChoice::mlp2) {
      FfnParams<T>::visit(self.mlp, prefix + "mlp.", f);
    }
  }
};

template <class U, class T>
SsfpParams<U> cast_block(const SsfpParams<T>& p) {
  return {cast_block<U>(p.ffn), p.w_res.template cast<U>(), cast_block<U>(p.mhsa),
          p.ln_gain.template cast<U>(), p.ln_bias.template cast<U>()};
}
template <class U, class T>
ProjectorParams<U> cast_block(const ProjectorParams<T>& p) {
  return {p.choice, cast_block<U>(p.ssfp), cast_block<U>(p.mlp)};
}

SsfpParams<float> init_ssfp(CounterRng& rng, std::size_t in_dim, std::size_t width,
                            std::size_t heads, Activation act);
ProjectorParams<float> init_projector(CounterRng& rng, ProjectorChoice choice,
                                      std::size_t in_dim, std::size_t width,
                                      std::size_t heads, Activation act);

template <class T>
Var<T> ssfp_forward(const Binder<T>& b, const SsfpParams<T>& p, Var<T> x,
                    double ln_eps = 1e-5);
template <class T>
Var<T> mlp2_forward(const Binder<T>& b, const FfnParams<T>& p, Var<T> x);
// Dispatch on p.choice; `none` returns x unchanged.
template <class T>
Var<T> project(const Binder<T>& b, const ProjectorParams<T>& p, Var<T> x);

template <class T>
struct ProjectedPair {
  Var<T> e_proj;
  Var<T> r_proj;
};

// Both branches must carry the same choice. With `none` the raw widths must
// already agree (ConfigError otherwise).
template <class T>
ProjectedPair<T> project_pair(const Binder<T>& b, const ProjectorParams<T>& pe,
                              const ProjectorParams<T>& pr, Var<T> enzyme,
                              Var<T> reaction);

}  // namespace tiger
