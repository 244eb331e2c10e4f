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

#include "tiger/projector.hpp"

namespace tiger {

std::string to_string(ProjectorChoice p) {
  switch (p) {
    case ProjectorChoice::ssfp: return "ssfp";
    case ProjectorChoice::mlp2: return "mlp2";
    case ProjectorChoice::none: return "none";
  }
  return "unknown";
}

ProjectorChoice projector_from_string(const std::string& s) {
  if (s == "ssfp") return ProjectorChoice::ssfp;
  if (s == "mlp2") return ProjectorChoice::mlp2;
  if (s == "none") return ProjectorChoice::none;
  throw ConfigError("unknown projector '" + s + "' (expected ssfp|mlp2|none)");
}

SsfpParams<float> init_ssfp(CounterRng& rng, std::size_t in_dim, std::size_t width,
                            std::size_t heads, Activation act) {
  SsfpParams<float> p;
  p.ffn = init_ffn(rng, in_dim, 2 * width, width, act);
  p.w_res = init_weight(rng, in_dim, width);
  p.mhsa = init_mha(rng, width, heads);
  p.ln_gain = Tensor::filled(Shape{width}, 1.0f);
  p.ln_bias = Tensor(Shape{width});
  return p;
}

ProjectorParams<float> init_projector(CounterRng& rng, ProjectorChoice choice,
                                      std::size_t in_dim, std::size_t width,
                                      std::size_t heads, Activation act) {
  ProjectorParams<float> p;
  p.choice = choice;
  if (choice == ProjectorChoice::ssfp) {
    p.ssfp = init_ssfp(rng, in_dim, width, heads, act);
  } else if (choice == ProjectorChoice::mlp2) {
    p.mlp = init_ffn(rng, in_dim, 2 * width, width, act);
  }
  return p;
}

template <class T>
Var<T> ssfp_forward(const Binder<T>& b, const SsfpParams<T>& p, Var<T> x,
                    double ln_eps) {
  if (x.cols() != p.w_res.rows()) {
    throw ShapeError("ssfp: input width " + std::to_string(x.cols()) +
                     " does not match W_res " + shape_str(p.w_res.shape()));
  }
  Var<T> h = add(ffn_forward(b, p.ffn, x), matmul(x, b(p.w_res)));
  Var<T> a = mha_forward(b, p.mhsa, h, h, 1, 1);
  return layer_norm(a, b(p.ln_gain), b(p.ln_bias), ln_eps);
}

template <class T>
Var<T> mlp2_forward(const Binder<T>& b, const FfnParams<T>& p, Var<T> x) {
  return ffn_forward(b, p, x);
}

template <class T>
Var<T> project(const Binder<T>& b, const ProjectorParams<T>& p, Var<T> x) {
  switch (p.choice) {
    case ProjectorChoice::ssfp: return ssfp_forward(b, p.ssfp, x);
    case ProjectorChoice::mlp2: return mlp2_forward(b, p.mlp, x);
    case ProjectorChoice::none: return x;
  }
  return x;
}

template <class T>
ProjectedPair<T> project_pair(const Binder<T>& b, const ProjectorParams<T>& pe,
                              const ProjectorParams<T>& pr, Var<T> enzyme,
                              Var<T> reaction) {
  if (pe.choice != pr.choice) {
    throw ConfigError("enzyme and reaction projectors disagree (" +
                      to_string(pe.choice) + " vs " + to_string(pr.choice) + ")");
  }
  if (pe.choice == ProjectorChoice::none && enzyme.cols() != reaction.cols()) {
    throw ConfigError("projector 'none' needs equal widths, got enzyme " +
                      std::to_string(enzyme.cols()) + " and reaction " +
                      std::to_string(reaction.cols()));
  }
  return {project(b, pe, enzyme), project(b, pr, reaction)};
}

#define TIGER_INSTANTIATE_PROJECTOR(T)                                          \
  template Var<T> ssfp_forward(const Binder<T>&, const SsfpParams<T>&, Var<T>, \
                               double);                                        \
  template Var<T> mlp2_forward(const Binder<T>&, const FfnParams<T>&, Var<T>); \
  template Var<T> project(const Binder<T>&, const ProjectorParams<T>&, Var<T>); \
  template ProjectedPair<T> project_pair(const Binder<T>&,                      \
                                         const ProjectorParams<T>&,             \
                                         const ProjectorParams<T>&, Var<T>,     \
                                         Var<T>);

TIGER_INSTANTIATE_PROJECTOR(float)
TIGER_INSTANTIATE_PROJECTOR(double)

#undef TIGER_INSTANTIATE_PROJECTOR

}  // namespace tiger
