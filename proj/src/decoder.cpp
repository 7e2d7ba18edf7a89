// Copyright 2026 The mtcr-vc Authors
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

#include "mtcr/decoder.hpp"

#include <cmath>

#include "mtcr/errors.hpp"

namespace mtcr {

namespace {
constexpr int kSmootherLayers = 2;
constexpr int kPostnetLayers = 3;
}  // namespace

Var align_speaker_keys_t(Ctx& c, Var bnf_spk, const RetrievalVars& retr, int level,
                         int gamma_t) {
  if (level < 1 || level > static_cast<int>(retr.a_t.size()))
    throw ConfigMismatch("align_speaker_keys: level out of range");
  Var keys = bnf_spk;
  for (int l = 0; l < level; ++l) {
    const Mat& a_t = c.t.val(retr.a_t[static_cast<size_t>(l)]);
    if (keys.rows() != a_t.rows * gamma_t)
      throw LengthMismatch("align_speaker_keys: speaker bnf length disagrees with maps");
    keys = c.t.seg_weighted_sum(retr.a_t[static_cast<size_t>(l)], keys);
  }
  return keys;
}

std::pair<Var, Var> fusion_block_forward_t(Ctx& c, const std::string& prefix, Var state,
                                           Var bnf_src, Var spk_keys, Var z_s) {
  if (spk_keys.rows() != z_s.rows())
    throw DimensionMismatch("fusion_block: spk_keys/z_s row counts differ");
  Var q = affine(c, prefix + ".q", state + affine(c, prefix + ".s", bnf_src));
  Var k = affine(c, prefix + ".k", spk_keys);
  const Real scale = std::sqrt(static_cast<Real>(q.cols()));
  Var logits = c.t.scale(c.t.matmul(q, k, false, true), Real(1) / scale);
  Var attn = c.t.softmax_rows(logits);
  Var v = affine(c, prefix + ".v", z_s);
  Var fused = state + c.t.matmul(attn, v);
  Var h = c.t.tanh_(conv_plane3x3(c, prefix + ".conv", fused));
  Var out = fused + affine(c, prefix + ".post", h);
  return {out, attn};
}

DecodeVars decode_t(Ctx& c, const SourceRepVars& src, Var bnf_src, Var bnf_spk,
                    const RetrievalVars& retr, const ModelConfig& cfg) {
  const int active = cfg.active_blocks();
  if (static_cast<int>(retr.z.size()) != active)
    throw ConfigMismatch("decode: retrieval level count != active_blocks");

  DecodeVars out;
  Var state = src.z_add;
  // Coarse-to-fine: the deepest retrieval level feeds the first block.
  for (int level = active; level >= 1; --level) {
    Var keys = align_speaker_keys_t(c, bnf_spk, retr, level, cfg.gamma_t);
    auto [next, attn] = fusion_block_forward_t(c, "dec.fuse" + std::to_string(level), state,
                                               bnf_src, keys, retr.z[static_cast<size_t>(level - 1)]);
    state = next;
    out.cross_attn.push_back(attn);
    out.cross_attn_level.push_back(level);
  }
  for (int s = 0; s < kSmootherLayers; ++s)
    state = state + self_attention(c, "dec.smooth" + std::to_string(s), state);

  out.mel_pre = affine(c, "dec.melhead", state);
  Var h = out.mel_pre;
  for (int p = 0; p < kPostnetLayers; ++p) {
    h = conv_plane3x3(c, "dec.post" + std::to_string(p), h);
    if (p + 1 < kPostnetLayers) h = c.t.tanh_(h);
  }
  out.mel = out.mel_pre + h;
  return out;
}

void init_decoder_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
  const int d = cfg.model_dim;
  for (int level = 1; level <= cfg.n_tcr_blocks; ++level) {
    const std::string p = "dec.fuse" + std::to_string(level);
    ps.create(p + ".s.w", cfg.bnf_dim, d, rng, cfg.bnf_dim);
    ps.create_zero(p + ".s.b", 1, d);
    ps.create(p + ".q.w", d, d, rng, d);
    ps.create_zero(p + ".q.b", 1, d);
    ps.create(p + ".k.w", cfg.bnf_dim, d, rng, cfg.bnf_dim);
    ps.create_zero(p + ".k.b", 1, d);
    const int c_l = cfg.channels_at(level + 1);  // width of Z_s_level
    ps.create(p + ".v.w", c_l, d, rng, c_l);
    ps.create_zero(p + ".v.b", 1, d);
    ps.create(p + ".conv.k", 9, 1, rng, 9);
    ps.create_zero(p + ".conv.b", 1, 1);
    ps.create(p + ".post.w", d, d, rng, d);
    ps.create_zero(p + ".post.b", 1, d);
  }
  for (int s = 0; s < kSmootherLayers; ++s) {
    const std::string p = "dec.smooth" + std::to_string(s);
    for (const char* part : {".q", ".k", ".v", ".o"}) {
      ps.create(p + part + ".w", d, d, rng, d);
      ps.create_zero(p + part + ".b", 1, d);
    }
  }
  ps.create("dec.melhead.w", d, cfg.mel_dim, rng, d);
  ps.create_zero("dec.melhead.b", 1, cfg.mel_dim);
  for (int p = 0; p < kPostnetLayers; ++p) {
    ps.create("dec.post" + std::to_string(p) + ".k", 9, 1, rng, 9);
    ps.create_zero("dec.post" + std::to_string(p) + ".b", 1, 1);
  }
}

Mat align_speaker_keys(ParamStore& ps, const Mat& bnf_spk,
                       const std::vector<Mat>& a_t_maps, int level, int gamma_t) {
  Tape t;
  Ctx c{t, ps};
  RetrievalVars retr;
  for (const Mat& m : a_t_maps) retr.a_t.push_back(t.leaf(m, false));
  retr.z.resize(retr.a_t.size());  // only a_t is consulted
  return t.val(align_speaker_keys_t(c, t.leaf(bnf_spk, false), retr, level, gamma_t));
}

}  // namespace mtcr
