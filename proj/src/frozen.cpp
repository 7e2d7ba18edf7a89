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

#include "mtcr/frozen.hpp"

#include <cmath>

#include "mtcr/errors.hpp"

namespace mtcr {

namespace {
// Internal widths of the frozen nets; deliberately small so the perceptual
// metrics stay cheap at any model size.
constexpr int kStyleWidth = 16;
constexpr int kBankWidth = 16;
constexpr int kRnnWidth = 16;

Var concat_rows_tree(Tape& t, std::vector<Var> rows) {
  while (rows.size() > 1) {
    std::vector<Var> next;
    next.reserve(rows.size() / 2 + 1);
    for (size_t i = 0; i + 1 < rows.size(); i += 2)
      next.push_back(t.concat_rows(rows[i], rows[i + 1]));
    if (rows.size() % 2 == 1) next.push_back(rows.back());
    rows = std::move(next);
  }
  return rows.front();
}

Var frozen_conv1d(Tape& t, Var x, Var w, Var b, int k, int stride) {
  const int t_in = x.rows(), ch = x.cols();
  const int t_out = conv1d_out_len(t_in, stride);
  Var patches = t.gather(x, conv1d_index(t_in, ch, k, stride), t_out, k * ch);
  return t.add_row(t.matmul(patches, w), b);
}

Var frozen_affine(Tape& t, Var x, Var w, Var b) { return t.add_row(t.matmul(x, w), b); }

}  // namespace

FrozenModels::FrozenModels(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  Rng rng(seed);
  auto& ps = params_;
  // Style: two strided convs, mean pooling, three affine layers.
  ps.create("style.c0.w", 3 * cfg.mel_dim, kStyleWidth, rng, 3 * cfg.mel_dim);
  ps.create("style.c0.b", 1, kStyleWidth, rng, kStyleWidth);
  ps.create("style.c1.w", 3 * kStyleWidth, kStyleWidth, rng, 3 * kStyleWidth);
  ps.create("style.c1.b", 1, kStyleWidth, rng, kStyleWidth);
  ps.create("style.f0.w", kStyleWidth, kStyleWidth, rng, kStyleWidth);
  ps.create("style.f0.b", 1, kStyleWidth, rng, kStyleWidth);
  ps.create("style.f1.w", kStyleWidth, kStyleWidth, rng, kStyleWidth);
  ps.create("style.f1.b", 1, kStyleWidth, rng, kStyleWidth);
  ps.create("style.f2.w", kStyleWidth, kStyleWidth, rng, kStyleWidth);
  ps.create("style.f2.b", 1, kStyleWidth, rng, kStyleWidth);
  // Content: two-kernel conv bank, projection conv, recurrence, affine head.
  ps.create("content.bank1.w", 1 * cfg.mel_dim, kBankWidth, rng, cfg.mel_dim);
  ps.create("content.bank1.b", 1, kBankWidth, rng, kBankWidth);
  ps.create("content.bank3.w", 3 * cfg.mel_dim, kBankWidth, rng, 3 * cfg.mel_dim);
  ps.create("content.bank3.b", 1, kBankWidth, rng, kBankWidth);
  ps.create("content.proj.w", 3 * kBankWidth, kRnnWidth, rng, 3 * kBankWidth);
  ps.create("content.proj.b", 1, kRnnWidth, rng, kRnnWidth);
  ps.create("content.rnn.w", kRnnWidth, kRnnWidth, rng, kRnnWidth);
  ps.create("content.rnn.u", kRnnWidth, kRnnWidth, rng, kRnnWidth);
  ps.create("content.rnn.b", 1, kRnnWidth, rng, kRnnWidth);
  ps.create("content.head.w", kRnnWidth, cfg.bnf_dim, rng, kRnnWidth);
  ps.create("content.head.b", 1, cfg.bnf_dim, rng, cfg.bnf_dim);
  // Speaker-verification stub: strided convs, pooling, affine to D.
  ps.create("sv.c0.w", 3 * cfg.mel_dim, kStyleWidth, rng, 3 * cfg.mel_dim);
  ps.create("sv.c0.b", 1, kStyleWidth, rng, kStyleWidth);
  ps.create("sv.c1.w", 3 * kStyleWidth, kStyleWidth, rng, 3 * kStyleWidth);
  ps.create("sv.c1.b", 1, kStyleWidth, rng, kStyleWidth);
  ps.create("sv.head.w", kStyleWidth, cfg.xvec_dim, rng, kStyleWidth);
  ps.create("sv.head.b", 1, cfg.xvec_dim, rng, cfg.xvec_dim);
}

Var FrozenModels::bind(Tape& t, const std::string& name) const {
  return t.leaf(params_.at(name), false);
}

StyleVars FrozenModels::style_t(Tape& t, Var mel) const {
  if (mel.cols() != cfg_.mel_dim) throw DimensionMismatch("style model: mel width");
  StyleVars out;
  out.h_l = t.tanh_(frozen_conv1d(t, mel, bind(t, "style.c0.w"), bind(t, "style.c0.b"), 3, 2));
  out.h_m = t.tanh_(frozen_conv1d(t, out.h_l, bind(t, "style.c1.w"), bind(t, "style.c1.b"), 3, 2));
  Var p = t.mean_rows(out.h_m);
  p = t.tanh_(frozen_affine(t, p, bind(t, "style.f0.w"), bind(t, "style.f0.b")));
  p = t.tanh_(frozen_affine(t, p, bind(t, "style.f1.w"), bind(t, "style.f1.b")));
  out.h_h = frozen_affine(t, p, bind(t, "style.f2.w"), bind(t, "style.f2.b"));
  return out;
}

Var FrozenModels::content_t(Tape& t, Var mel) const {
  if (mel.cols() != cfg_.mel_dim) throw DimensionMismatch("content model: mel width");
  Var b1 = frozen_conv1d(t, mel, bind(t, "content.bank1.w"), bind(t, "content.bank1.b"), 1, 1);
  Var b3 = frozen_conv1d(t, mel, bind(t, "content.bank3.w"), bind(t, "content.bank3.b"), 3, 1);
  Var bank = t.tanh_(b1 + b3);
  Var x = t.tanh_(frozen_conv1d(t, bank, bind(t, "content.proj.w"), bind(t, "content.proj.b"), 3, 1));
  // Unidirectional recurrence over frames.
  Var xw = t.add_row(t.matmul(x, bind(t, "content.rnn.w")), bind(t, "content.rnn.b"));
  Var u = bind(t, "content.rnn.u");
  Var h = t.leaf(Mat(1, kRnnWidth), false);
  std::vector<Var> states;
  states.reserve(static_cast<size_t>(x.rows()));
  for (int step = 0; step < x.rows(); ++step) {
    Var xt = t.slice_rows(xw, step, 1);
    h = t.tanh_(xt + t.matmul(h, u));
    states.push_back(h);
  }
  Var seq = concat_rows_tree(t, std::move(states));
  return frozen_affine(t, seq, bind(t, "content.head.w"), bind(t, "content.head.b"));
}

StyleFeatures FrozenModels::style(const Mat& mel) const {
  Tape t;
  StyleVars v = style_t(t, t.leaf(mel, false));
  return {t.val(v.h_l), t.val(v.h_m), t.val(v.h_h)};
}

Mat FrozenModels::content(const Mat& mel) const {
  Tape t;
  return t.val(content_t(t, t.leaf(mel, false)));
}

Mat FrozenModels::sv_embed(const Mat& mel) const {
  Tape t;
  Var x = t.leaf(mel, false);
  x = t.tanh_(frozen_conv1d(t, x, bind(t, "sv.c0.w"), bind(t, "sv.c0.b"), 3, 2));
  x = t.tanh_(frozen_conv1d(t, x, bind(t, "sv.c1.w"), bind(t, "sv.c1.b"), 3, 2));
  Var p = t.mean_rows(x);
  return t.val(frozen_affine(t, p, bind(t, "sv.head.w"), bind(t, "sv.head.b")));
}

FrozenModels build_frozen(const ModelConfig& cfg) {
  return FrozenModels(cfg, mix_seed(cfg.seed, hash_str("frozen-models")));
}

}  // namespace mtcr
