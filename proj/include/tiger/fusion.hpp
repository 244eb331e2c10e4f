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

// Dynamic gating network: fuses a sequence embedding and a (possibly
// unreliable) text embedding into one enzyme representation.
//
//   z_s = FFN_S(f_seq), z_t = FFN_T(f_text)
//   s_att = MHA(z_s, z_t, z_t), t_att = MHA(z_t, z_s, z_s)
//   alpha = sigmoid([s_att ‖ t_att]·W_g + b_g)
//   f_gated = alpha ⊙ s_att + (1 - alpha) ⊙ t_att
//   f_fused = FFN_fuse([f_gated ‖ (s_att + t_att)])
//
// All functions are batched: inputs stack B items of l_s (resp. l_t) token
// rows each, and attention never crosses item boundaries. Token rows are
// mean-pooled to one row per item before gating.

#include <string>

#include "tiger/params.hpp"

namespace tiger {

enum class GateMode { per_dim, scalar };
enum class FusionMode { dgn, concat, seq_only };

std::string to_string(GateMode g);
GateMode gate_mode_from_string(const std::string& s);
std::string to_string(FusionMode f);
FusionMode fusion_mode_from_string(const std::string& s);

template <class T>
struct DgnParams {
  // Which blocks exist: seq_only holds ffn_s; concat adds ffn_t and ffn_fuse;
  // dgn holds everything.
  FusionMode mode = FusionMode::dgn;
  FfnParams<T> ffn_s, ffn_t;
  MhaParams<T> mha_s2t, mha_t2s;
  BasicTensor<T> w_g, b_g;
  FfnParams<T> ffn_fuse;

  std::size_t width() const { return ffn_s.out_dim(); }

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    FfnParams<T>::visit(self.ffn_s, prefix + "ffn_s.", f);
    if (self.mode == FusionMode::seq_only) return;
    FfnParams<T>::visit(self.ffn_t, prefix + "ffn_t.", f);
    if (self.mode == FusionMode::dgn) {
      MhaParams<T>::visit(self.mha_s2t, prefix + "mha_s2t.", f);
      MhaParams<T>::visit(self.mha_t2s, prefix + "mha_t2s.", f);
      f(prefix + "w_g", self.w_g);
      f(prefix + "b_g", self.b_g);
    }
    FfnParams<T>::visit(self.ffn_fuse, prefix + "ffn_fuse.", f);
  }
};

template <class U, class T>
DgnParams<U> cast_block(const DgnParams<T>& p) {
  DgnParams<U> out;
  out.mode = p.mode;
  out.ffn_s = cast_block<U>(p.ffn_s);
  out.ffn_t = cast_block<U>(p.ffn_t);
  out.mha_s2t = cast_block<U>(p.mha_s2t);
  out.mha_t2s = cast_block<U>(p.mha_t2s);
  out.w_g = p.w_g.template cast<U>();
  out.b_g = p.b_g.template cast<U>();
  out.ffn_fuse = cast_block<U>(p.ffn_fuse);
  return out;
}

// FFN hidden widths are 2·width. text_dim is ignored for seq_only.
DgnParams<float> init_dgn(CounterRng& rng, FusionMode mode, std::size_t seq_dim,
                          std::size_t text_dim, std::size_t width,
                          std::size_t heads, Activation act, GateMode gate);

template <class T>
struct ModalityFeatures {
  Var<T> z_s;
  Var<T> z_t;
};

template <class T>
struct GateOutput {
  Var<T> f_gated;
  Var<T> alpha;  // B×d, or B×1 for the scalar gate
};

template <class T>
struct DgnOutput {
  Var<T> fused;
  Var<T> alpha;
  Var<T> s_att;  // pooled, B×d
  Var<T> t_att;
  Var<T> f_gated;
};

template <class T>
ModalityFeatures<T> project_modalities(const Binder<T>& b,
                                       const DgnParams<T>& p, Var<T> f_seq,
                                       Var<T> f_text);

// MHA(q_src, kv_src, kv_src) with l_q / l_k tokens per item.
template <class T>
Var<T> cross_attention(const Binder<T>& b, const MhaParams<T>& p,
                       Var<T> q_src, Var<T> kv_src, std::size_t lq = 1,
                       std::size_t lk = 1);

template <class T>
GateOutput<T> gated_fusion(const Binder<T>& b, const BasicTensor<T>& w_g,
                           const BasicTensor<T>& b_g, Var<T> s_att,
                           Var<T> t_att);

template <class T>
DgnOutput<T> dgn_forward(const Binder<T>& b, const DgnParams<T>& p,
                         Var<T> f_seq, Var<T> f_text, std::size_t l_s = 1,
                         std::size_t l_t = 1);

// FFN_S only, pooled to one row per item; attention and gate bypassed.
template <class T>
Var<T> fuse_without_text(const Binder<T>& b, const DgnParams<T>& p,
                         Var<T> f_seq, std::size_t l_s = 1);

// FFN_fuse([z_s ‖ z_t]) on pooled features, without attention or gate.
template <class T>
Var<T> fuse_concat_baseline(const Binder<T>& b, const DgnParams<T>& p,
                            Var<T> f_seq, Var<T> f_text, std::size_t l_s = 1,
                            std::size_t l_t = 1);

}  // namespace tiger
