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

#include "mtcr/encoders.hpp"

#include "mtcr/errors.hpp"

namespace mtcr {

namespace {
constexpr int kContentBlocks = 2;
constexpr int kRhythmConvK = 3;
constexpr int kRhythmStride = 2;
}  // namespace

Var content_encode_t(Ctx& c, Var bnf, const ModelConfig& cfg) {
  if (bnf.cols() != cfg.bnf_dim)
    throw DimensionMismatch("content_encode: bnf width != bnf_dim");
  Var x = affine(c, "enc.content.in", bnf);
  for (int b = 0; b < kContentBlocks; ++b) {
    const std::string p = "enc.content.b" + std::to_string(b);
    x = x + self_attention(c, p + ".attn", x);
    Var h = c.t.tanh_(affine(c, p + ".ff0", x));
    x = x + affine(c, p + ".ff1", h);
  }
  return x;
}

Var pitch_encode_t(Ctx& c, Var pitch, const ModelConfig& cfg, int downsample) {
  if (pitch.cols() != cfg.pitch_dim)
    throw DimensionMismatch("pitch_encode: pitch width != pitch_dim");
  if (pitch.rows() % downsample != 0)
    throw DivisibilityError("pitch_encode: downsample=" + std::to_string(downsample) +
                            " does not divide T=" + std::to_string(pitch.rows()));
  Var x = affine(c, "enc.pitch.in", pitch);
  Var pooled = c.t.avg_pool_rows(x, downsample);
  return c.t.repeat_rows(pooled, downsample);
}

Var rhythm_encode_t(Ctx& c, Var bnf, const ModelConfig& cfg) {
  if (bnf.cols() != cfg.bnf_dim)
    throw DimensionMismatch("rhythm_encode: bnf width != bnf_dim");
  Var h = c.t.tanh_(conv1d(c, "enc.rhythm.c0", bnf, kRhythmConvK, kRhythmStride));
  h = c.t.tanh_(conv1d(c, "enc.rhythm.c1", h, kRhythmConvK, kRhythmStride));
  Var pooled = c.t.mean_rows(h);
  return affine(c, "enc.rhythm.head", pooled);
}

SourceRepVars combine_t(Ctx& c, Var content, Var pitch, Var rhythm) {
  if (!content.val().same_shape(pitch.val()))
    throw DimensionMismatch("combine: content/pitch shapes differ");
  if (rhythm.rows() != 1 || rhythm.cols() != content.cols())
    throw DimensionMismatch("combine: rhythm must be 1 x width");
  SourceRepVars r;
  r.content = content;
  r.pitch = pitch;
  r.rhythm = rhythm;
  r.z_add = c.t.add_row(content + pitch, rhythm);
  return r;
}

SourceRepVars encode_source_t(Ctx& c, Var bnf, Var pitch, const ModelConfig& cfg) {
  Var content = content_encode_t(c, bnf, cfg);
  Var pitch_rep = pitch_encode_t(c, pitch, cfg);
  Var rhythm = rhythm_encode_t(c, bnf, cfg);
  return combine_t(c, content, pitch_rep, rhythm);
}

void init_encoder_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
  const int d = cfg.model_dim;
  ps.create("enc.content.in.w", cfg.bnf_dim, d, rng, cfg.bnf_dim);
  ps.create_zero("enc.content.in.b", 1, d);
  for (int b = 0; b < kContentBlocks; ++b) {
    const std::string p = "enc.content.b" + std::to_string(b);
    for (const char* part : {".attn.q", ".attn.k", ".attn.v", ".attn.o"}) {
      ps.create(p + part + ".w", d, d, rng, d);
      ps.create_zero(p + part + ".b", 1, d);
    }
    ps.create(p + ".ff0.w", d, d, rng, d);
    ps.create_zero(p + ".ff0.b", 1, d);
    ps.create(p + ".ff1.w", d, d, rng, d);
    ps.create_zero(p + ".ff1.b", 1, d);
  }
  ps.create("enc.pitch.in.w", cfg.pitch_dim, d, rng, cfg.pitch_dim);
  ps.create_zero("enc.pitch.in.b", 1, d);
  ps.create("enc.rhythm.c0.w", kRhythmConvK * cfg.bnf_dim, d, rng, kRhythmConvK * cfg.bnf_dim);
  ps.create_zero("enc.rhythm.c0.b", 1, d);
  ps.create("enc.rhythm.c1.w", kRhythmConvK * d, d, rng, kRhythmConvK * d);
  ps.create_zero("enc.rhythm.c1.b", 1, d);
  ps.create("enc.rhythm.head.w", d, d, rng, d);
  ps.create_zero("enc.rhythm.head.b", 1, d);
}

Mat content_encode(ParamStore& ps, const Mat& bnf, const ModelConfig& cfg) {
  Tape t;
  Ctx c{t, ps};
  return t.val(content_encode_t(c, t.leaf(bnf, false), cfg));
}

Mat pitch_encode(ParamStore& ps, const Mat& pitch, const ModelConfig& cfg, int downsample) {
  Tape t;
  Ctx c{t, ps};
  return t.val(pitch_encode_t(c, t.leaf(pitch, false), cfg, downsample));
}

Mat rhythm_encode(ParamStore& ps, const Mat& bnf, const ModelConfig& cfg) {
  Tape t;
  Ctx c{t, ps};
  return t.val(rhythm_encode_t(c, t.leaf(bnf, false), cfg));
}

SourceRepresentation combine(const Mat& content, const Mat& pitch, const Mat& rhythm) {
  Tape t;
  ParamStore empty;
  Ctx c{t, empty};
  SourceRepVars r = combine_t(c, t.leaf(content, false), t.leaf(pitch, false),
                              t.leaf(rhythm, false));
  return {content, pitch, rhythm, t.val(r.z_add)};
}

SourceRepresentation encode_source(ParamStore& ps, const Mat& bnf, const Mat& pitch,
                                   const ModelConfig& cfg) {
  Tape t;
  Ctx c{t, ps};
  SourceRepVars r = encode_source_t(c, t.leaf(bnf, false), t.leaf(pitch, false), cfg);
  return {t.val(r.content), t.val(r.pitch), t.val(r.rhythm), t.val(r.z_add)};
}

}  // namespace mtcr
