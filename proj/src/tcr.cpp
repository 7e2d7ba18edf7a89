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

#include "mtcr/tcr.hpp"

#include <cmath>

#include "mtcr/errors.hpp"

namespace mtcr {

TemporalSegments temporal_segmentation(const Mat& h, int gamma_t) {
  if (gamma_t < 1) throw BadRange("temporal_segmentation: gamma_t must be >= 1");
  if (h.rows % gamma_t != 0)
    throw DivisibilityError("temporal_segmentation: gamma_t=" + std::to_string(gamma_t) +
                            " does not divide T=" + std::to_string(h.rows));
  TemporalSegments s;
  s.segments = h.rows / gamma_t;
  s.gamma_t = gamma_t;
  s.channels = h.cols;
  s.a = h.a;  // (s, j, c) row-major coincides with the original layout
  return s;
}

Mat temporal_unsegment(const TemporalSegments& s) {
  Mat h(s.segments * s.gamma_t, s.channels);
  h.a = s.a;
  return h;
}

ChannelSegments channel_segmentation(const Mat& h, int gamma_c, int gamma_tr) {
  if (gamma_c < 1 || gamma_tr < 1) throw BadRange("channel_segmentation: factors must be >= 1");
  if (h.rows % gamma_tr != 0)
    throw DivisibilityError("channel_segmentation: gamma_tr=" + std::to_string(gamma_tr) +
                            " does not divide T'=" + std::to_string(h.rows));
  if (h.cols % gamma_c != 0)
    throw DivisibilityError("channel_segmentation: gamma_c=" + std::to_string(gamma_c) +
                            " does not divide C=" + std::to_string(h.cols));
  ChannelSegments s;
  s.ranges = h.rows / gamma_tr;
  s.groups = h.cols / gamma_c;
  s.gamma_c = gamma_c;
  s.gamma_tr = gamma_tr;
  s.a.resize(h.size());
  for (int a = 0; a < s.ranges; ++a)
    for (int b = 0; b < s.groups; ++b)
      for (int i = 0; i < gamma_c; ++i)
        for (int j = 0; j < gamma_tr; ++j)
          s.at(a, b, i, j) = h(a * gamma_tr + j, b * gamma_c + i);
  return s;
}

Mat channel_unsegment(const ChannelSegments& s) {
  Mat h(s.ranges * s.gamma_tr, s.groups * s.gamma_c);
  for (int a = 0; a < s.ranges; ++a)
    for (int b = 0; b < s.groups; ++b)
      for (int i = 0; i < s.gamma_c; ++i)
        for (int j = 0; j < s.gamma_tr; ++j)
          h(a * s.gamma_tr + j, b * s.gamma_c + i) = s.at(a, b, i, j);
  return h;
}

namespace {

Var uniform_weights(Tape& t, int rows, int cols) {
  Mat w(rows, cols);
  w.fill(Real(1) / cols);
  return t.leaf(std::move(w), false);
}

}  // namespace

std::pair<Var, Var> temporal_retrieval_t(Ctx& c, Var z_prev, Var xvec,
                                         const std::string& prefix, int gamma_t,
                                         bool uniform_attn) {
  const int t_len = z_prev.rows();
  const int ch = z_prev.cols();
  if (t_len % gamma_t != 0)
    throw DivisibilityError("temporal_retrieval: gamma_t=" + std::to_string(gamma_t) +
                            " does not divide T=" + std::to_string(t_len));
  if (c.ps.at(prefix + ".tq.w").rows != xvec.cols())
    throw DimensionMismatch("temporal_retrieval: speaker embedding width");

  Var kernel = c.P(prefix + ".conv.k");
  Var bias = c.P(prefix + ".conv.b");
  // One shared kernel produces both the value features and the keys; the
  // key conv runs on the whole sequence before segmentation.
  Var h_t = conv_plane3x3_with(c, kernel, bias, z_prev);
  const int segments = t_len / gamma_t;

  Var a_t;
  if (uniform_attn) {
    a_t = uniform_weights(c.t, segments, gamma_t);
  } else {
    Var k_t = conv_plane3x3_with(c, kernel, bias, h_t);
    Var q_t = affine(c, prefix + ".tq", xvec);  // 1 x C
    Var logits = c.t.matmul(k_t, q_t, false, true);  // T x 1
    logits = c.t.reshape(logits, segments, gamma_t);
    const Real scale = std::sqrt(static_cast<Real>(ch));
    a_t = c.t.softmax_rows(c.t.scale(logits, Real(1) / scale));
  }
  Var h_c = c.t.seg_weighted_sum(a_t, h_t);
  return {h_c, a_t};
}

std::pair<Var, Var> channel_retrieval_t(Ctx& c, Var h_c, Var xvec,
                                        const std::string& prefix, int gamma_c,
                                        int gamma_tr, bool uniform_attn) {
  const int t_prime = h_c.rows();
  const int ch = h_c.cols();
  if (t_prime % gamma_tr != 0)
    throw DivisibilityError("channel_retrieval: gamma_tr=" + std::to_string(gamma_tr) +
                            " does not divide T'=" + std::to_string(t_prime));
  if (ch % gamma_c != 0)
    throw DivisibilityError("channel_retrieval: gamma_c=" + std::to_string(gamma_c) +
                            " does not divide C=" + std::to_string(ch));

  const int ranges = t_prime / gamma_tr;
  const int groups = ch / gamma_c;
  // Key = value = the channel segmentation, rows (a, b, i), cols j.
  Var k_c = c.t.gather(h_c, channel_seg_index(t_prime, ch, gamma_c, gamma_tr),
                       ranges * groups * gamma_c, gamma_tr);
  Var a_c;
  if (uniform_attn) {
    a_c = uniform_weights(c.t, ranges * groups, gamma_c);
  } else {
    Var q_c = affine(c, prefix + ".cq", xvec);  // 1 x gamma_tr
    if (q_c.cols() != gamma_tr)
      throw DimensionMismatch("channel_retrieval: query width != gamma_tr");
    Var logits = c.t.matmul(k_c, q_c, false, true);  // (ranges*groups*gamma_c) x 1
    logits = c.t.reshape(logits, ranges * groups, gamma_c);
    const Real scale = std::sqrt(static_cast<Real>(gamma_tr));
    a_c = c.t.softmax_rows(c.t.scale(logits, Real(1) / scale));
  }
  Var strips = c.t.seg_weighted_sum(a_c, k_c);  // (ranges*groups) x gamma_tr
  Var z = c.t.gather(strips, strips_to_time_index(t_prime, groups, gamma_tr), t_prime, groups);
  return {z, a_c};
}

TcrBlockVars tcr_block_forward_t(Ctx& c, Var z_prev, Var xvec, int level,
                                 const ModelConfig& cfg) {
  const std::string prefix = "tcr.block" + std::to_string(level);
  const bool uni_t = cfg.ablation.uniform_temporal_attn.at(static_cast<size_t>(level - 1));
  const bool uni_c = cfg.ablation.uniform_channel_attn.at(static_cast<size_t>(level - 1));
  auto [h_c, a_t] = temporal_retrieval_t(c, z_prev, xvec, prefix, cfg.gamma_t, uni_t);
  auto [z, a_c] = channel_retrieval_t(c, h_c, xvec, prefix, cfg.gamma_c,
                                      cfg.gamma_tr.at(static_cast<size_t>(level - 1)), uni_c);
  return {z, a_t, a_c};
}

RetrievalVars mtcr_forward_t(Ctx& c, Var mel, Var xvec, const ModelConfig& cfg) {
  if (mel.cols() != cfg.mel_dim)
    throw DimensionMismatch("mtcr_forward: mel width != mel_dim");
  if (xvec.rows() != 1 || xvec.cols() != cfg.xvec_dim)
    throw DimensionMismatch("mtcr_forward: speaker embedding must be 1 x xvec_dim");
  const int multiple = cfg.retrieval_multiple();
  if (mel.rows() % multiple != 0)
    throw DivisibilityError("mtcr_forward: sequence length " + std::to_string(mel.rows()) +
                            " must be a multiple of " + std::to_string(multiple));

  RetrievalVars out;
  Var z = conv_plane3x3(c, "tcr.prenet.conv", mel);
  z = affine(c, "tcr.prenet.lift", z);
  out.z0 = z;
  for (int l = 1; l <= cfg.active_blocks(); ++l) {
    TcrBlockVars blk = tcr_block_forward_t(c, z, xvec, l, cfg);
    out.z.push_back(blk.z);
    out.a_t.push_back(blk.a_t);
    out.a_c.push_back(blk.a_c);
    z = blk.z;
  }
  return out;
}

void init_tcr_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
  ps.create("tcr.prenet.conv.k", 9, 1, rng, 9);
  ps.create_zero("tcr.prenet.conv.b", 1, 1);
  ps.create("tcr.prenet.lift.w", cfg.mel_dim, cfg.prenet_channels, rng, cfg.mel_dim);
  ps.create_zero("tcr.prenet.lift.b", 1, cfg.prenet_channels);
  for (int l = 1; l <= cfg.n_tcr_blocks; ++l) {
    const std::string p = "tcr.block" + std::to_string(l);
    const int ch_in = cfg.channels_at(l);
    ps.create(p + ".conv.k", 9, 1, rng, 9);
    ps.create_zero(p + ".conv.b", 1, 1);
    ps.create(p + ".tq.w", cfg.xvec_dim, ch_in, rng, cfg.xvec_dim);
    ps.create_zero(p + ".tq.b", 1, ch_in);
    ps.create(p + ".cq.w", cfg.xvec_dim, cfg.gamma_tr.at(static_cast<size_t>(l - 1)), rng,
              cfg.xvec_dim);
    ps.create_zero(p + ".cq.b", 1, cfg.gamma_tr.at(static_cast<size_t>(l - 1)));
  }
}

SpeakerRetrievalOutput extract_retrieval(Tape& t, const RetrievalVars& r) {
  SpeakerRetrievalOutput out;
  out.z0 = t.val(r.z0);
  for (size_t i = 0; i < r.z.size(); ++i) {
    out.z.push_back(t.val(r.z[i]));
    const Mat& at = t.val(r.a_t[i]);
    const Mat& ac = t.val(r.a_c[i]);
    out.a_t.push_back(at);
    out.a_c.push_back(ac);
    out.a_t_shape.push_back({at.rows, 1, at.cols});
    // a_c rows enumerate (range, group); ranges = T'/gamma_tr recovered from
    // z rows: T' = z.rows, groups = z.cols.
    const int t_prime = out.z.back().rows;
    const int groups = out.z.back().cols;
    const int ranges = groups > 0 ? ac.rows / groups : 0;
    (void)t_prime;
    out.a_c_shape.push_back({ranges, groups, 1, ac.cols});
  }
  return out;
}

SpeakerRetrievalOutput mtcr_forward(ParamStore& ps, const Mat& mel, const Mat& xvec,
                                    const ModelConfig& cfg) {
  Tape t;
  Ctx c{t, ps};
  RetrievalVars r = mtcr_forward_t(c, t.leaf(mel, false), t.leaf(xvec, false), cfg);
  return extract_retrieval(t, r);
}

std::pair<Mat, Mat> temporal_retrieval(ParamStore& ps, const Mat& z_prev, const Mat& xvec,
                                       int level, int gamma_t, bool uniform_attn) {
  Tape t;
  Ctx c{t, ps};
  auto [h_c, a_t] = temporal_retrieval_t(c, t.leaf(z_prev, false), t.leaf(xvec, false),
                                         "tcr.block" + std::to_string(level), gamma_t,
                                         uniform_attn);
  return {t.val(h_c), t.val(a_t)};
}

std::pair<Mat, Mat> channel_retrieval(ParamStore& ps, const Mat& h_c, const Mat& xvec,
                                      int level, int gamma_c, int gamma_tr, bool uniform_attn) {
  Tape t;
  Ctx c{t, ps};
  auto [z, a_c] = channel_retrieval_t(c, t.leaf(h_c, false), t.leaf(xvec, false),
                                      "tcr.block" + std::to_string(level), gamma_c, gamma_tr,
                                      uniform_attn);
  return {t.val(z), t.val(a_c)};
}

}  // namespace mtcr
