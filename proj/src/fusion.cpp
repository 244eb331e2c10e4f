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

#include "tiger/fusion.hpp"

namespace tiger {

std::string to_string(GateMode g) {
  return g == GateMode::per_dim ? "per_dim" : "scalar";
}

GateMode gate_mode_from_string(const std::string& s) {
  if (s == "per_dim") return GateMode::per_dim;
  if (s == "scalar") return GateMode::scalar;
  throw ConfigError("unknown gate mode '" + s + "' (expected per_dim|scalar)");
}

std::string to_string(FusionMode f) {
  switch (f) {
    case FusionMode::dgn: return "dgn";
    case FusionMode::concat: return "concat";
    case FusionMode::seq_only: return "seq_only";
  }
  return "unknown";
}

FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "dgn") return FusionMode::dgn;
  if (s == "concat") return FusionMode::concat;
  if (s == "seq_only") return FusionMode::seq_only;
  throw ConfigError("unknown fusion mode '" + s + "' (expected dgn|concat|seq_only)");
}

DgnParams<float> init_dgn(CounterRng& rng, FusionMode mode, std::size_t seq_dim,
                          std::size_t text_dim, std::size_t width,
                          std::size_t heads, Activation act, GateMode gate) {
  if (width == 0) throw ConfigError("model width must be positive");
  DgnParams<float> p;
  p.mode = mode;
  p.ffn_s = init_ffn(rng, seq_dim, 2 * width, width, act);
  if (mode == FusionMode::seq_only) return p;
  if (text_dim == 0) throw ConfigError("fusion mode " + to_string(mode) + " needs text embeddings");
  p.ffn_t = init_ffn(rng, text_dim, 2 * width, width, act);
  if (mode == FusionMode::dgn) {
    p.mha_s2t = init_mha(rng, width, heads);
    p.mha_t2s = init_mha(rng, width, heads);
    const std::size_t gate_out = gate == GateMode::per_dim ? width : 1;
    p.w_g = init_weight(rng, 2 * width, gate_out);
    p.b_g = Tensor(Shape{gate_out});
  }
  p.ffn_fuse = init_ffn(rng, 2 * width, 2 * width, width, act);
  return p;
}

template <class T>
ModalityFeatures<T> project_modalities(const Binder<T>& b, const DgnParams<T>& p,
                                       Var<T> f_seq, Var<T> f_text) {
  return {ffn_forward(b, p.ffn_s, f_seq), ffn_forward(b, p.ffn_t, f_text)};
}

template <class T>
Var<T> cross_attention(const Binder<T>& b, const MhaParams<T>& p, Var<T> q_src,
                       Var<T> kv_src, std::size_t lq, std::size_t lk) {
  return mha_forward(b, p, q_src, kv_src, lq, lk);
}

template <class T>
GateOutput<T> gated_fusion(const Binder<T>& b, const BasicTensor<T>& w_g,
                           const BasicTensor<T>& b_g, Var<T> s_att, Var<T> t_att) {
  if (s_att.rows() != t_att.rows() || s_att.cols() != t_att.cols()) {
    throw ShapeError("gated_fusion: s_att " + shape_str(s_att.shape()) +
                     " and t_att " + shape_str(t_att.shape()) + " differ");
  }
  Var<T> z = concat_cols(s_att, t_att);
  Var<T> alpha = sigmoid(add_row(matmul(z, b(w_g)), b(b_g)));
  Var<T> f;
  if (alpha.cols() == 1 && s_att.cols() != 1) {
    f = add(mul_col(s_att, alpha), mul_col(t_att, one_minus(alpha)));
  } else {
    f = add(mul(alpha, s_att), mul(one_minus(alpha), t_att));
  }
  return {f, alpha};
}

template <class T>
DgnOutput<T> dgn_forward(const Binder<T>& b, const DgnParams<T>& p, Var<T> f_seq,
                         Var<T> f_text, std::size_t l_s, std::size_t l_t) {
  if (p.mode != FusionMode::dgn) {
    throw ConfigError("dgn_forward needs parameters initialised for the dgn mode");
  }
  auto [z_s, z_t] = project_modalities(b, p, f_seq, f_text);
  Var<T> s_att = cross_attention(b, p.mha_s2t, z_s, z_t, l_s, l_t);
  Var<T> t_att = cross_attention(b, p.mha_t2s, z_t, z_s, l_t, l_s);
  if (l_s > 1) s_att = mean_groups(s_att, l_s);
  if (l_t > 1) t_att = mean_groups(t_att, l_t);
  GateOutput<T> gate = gated_fusion(b, p.w_g, p.b_g, s_att, t_att);
  Var<T> fused = ffn_forward(b, p.ffn_fuse, concat_cols(gate.f_gated, add(s_att, t_att)));
  return {fused, gate.alpha, s_att, t_att, gate.f_gated};
}

template <class T>
Var<T> fuse_without_text(const Binder<T>& b, const DgnParams<T>& p, Var<T> f_seq,
                         std::size_t l_s) {
  Var<T> z_s = ffn_forward(b, p.ffn_s, f_seq);
  return l_s > 1 ? mean_groups(z_s, l_s) : z_s;
}

template <class T>
Var<T> fuse_concat_baseline(const Binder<T>& b, const DgnParams<T>& p,
                            Var<T> f_seq, Var<T> f_text, std::size_t l_s,
                            std::size_t l_t) {
  if (p.mode == FusionMode::seq_only) {
    throw ConfigError("concat fusion needs text parameters");
  }
  auto [z_s, z_t] = project_modalities(b, p, f_seq, f_text);
  if (l_s > 1) z_s = mean_groups(z_s, l_s);
  if (l_t > 1) z_t = mean_groups(z_t, l_t);
  return ffn_forward(b, p.ffn_fuse, concat_cols(z_s, z_t));
}

#define TIGER_INSTANTIATE_FUSION(T)                                              \
  template ModalityFeatures<T> project_modalities(const Binder<T>&,              \
                                                  const DgnParams<T>&, Var<T>,   \
                                                  Var<T>);                       \
  template Var<T> cross_attention(const Binder<T>&, const MhaParams<T>&, Var<T>, \
                                  Var<T>, std::size_t, std::size_t);             \
  template GateOutput<T> gated_fusion(const Binder<T>&, const BasicTensor<T>&,   \
                                      const BasicTensor<T>&, Var<T>, Var<T>);    \
  template DgnOutput<T> dgn_forward(const Binder<T>&, const DgnParams<T>&,       \
                                    Var<T>, Var<T>, std::size_t, std::size_t);   \
  template Var<T> fuse_without_text(const Binder<T>&, const DgnParams<T>&,       \
                                    Var<T>, std::size_t);                        \
  template Var<T> fuse_concat_baseline(const Binder<T>&, const DgnParams<T>&,    \
                                       Var<T>, Var<T>, std::size_t, std::size_t);

TIGER_INSTANTIATE_FUSION(float)
TIGER_INSTANTIATE_FUSION(double)

#undef TIGER_INSTANTIATE_FUSION

}  // namespace tiger
