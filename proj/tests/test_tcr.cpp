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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mtcr/errors.hpp"
#include "mtcr/rng.hpp"
#include "mtcr/tcr.hpp"

using namespace mtcr;

namespace {

// Independent nested-loop oracle for the 3x3 plane convolution with
// replication padding.
Mat oracle_conv3x3(const Mat& x, const Mat& k9, Real bias) {
  auto clampi = [](int v, int lo, int hi) { return std::max(lo, std::min(v, hi)); };
  Mat out(x.rows, x.cols);
  for (int t = 0; t < x.rows; ++t)
    for (int c = 0; c < x.cols; ++c) {
      Real acc = bias;
      int w = 0;
      for (int dt = -1; dt <= 1; ++dt)
        for (int dc = -1; dc <= 1; ++dc)
          acc += k9(w++, 0) * x(clampi(t + dt, 0, x.rows - 1), clampi(c + dc, 0, x.cols - 1));
      out(t, c) = acc;
    }
  return out;
}

// Independent nested-loop blocked mean pooling: temporal blocks of gt,
// channel blocks of gc.
Mat oracle_block_mean(const Mat& h, int gt, int gc) {
  Mat out(h.rows / gt, h.cols / gc);
  for (int s = 0; s < out.rows; ++s)
    for (int b = 0; b < out.cols; ++b) {
      Real acc = 0;
      for (int j = 0; j < gt; ++j)
        for (int i = 0; i < gc; ++i) acc += h(s * gt + j, b * gc + i);
      out(s, b) = acc / (gt * gc);
    }
  return out;
}

ModelConfig small_block_cfg(int channels, int gt, int gc, int gtr) {
  ModelConfig c;
  c.mel_dim = 8;
  c.bnf_dim = 8;
  c.xvec_dim = 6;
  c.model_dim = 8;
  c.prenet_channels = channels;
  c.n_tcr_blocks = 1;
  c.gamma_t = gt;
  c.gamma_c = gc;
  c.gamma_tr = {gtr};
  return validate_config(c);
}

ParamStore tcr_params_for(const ModelConfig& cfg, uint64_t seed = 99) {
  ParamStore ps;
  Rng rng(seed);
  init_tcr_params(ps, cfg, rng);
  return ps;
}

void check_rows_are_distributions(const Mat& m, Real tol = 1e-6) {
  for (int i = 0; i < m.rows; ++i) {
    Real sum = 0;
    for (int j = 0; j < m.cols; ++j) {
      CHECK(m(i, j) >= 0);
      sum += m(i, j);
    }
    CHECK(std::abs(sum - 1) < tol);
  }
}

}  // namespace

TEST_CASE("temporal segmentation is an index-preserving reshape") {
  Rng rng(1);
  Mat h = random_mat(8, 2, rng);
  TemporalSegments s = temporal_segmentation(h, 4);
  CHECK(s.segments == 2);
  CHECK(s.gamma_t == 4);
  CHECK(s.channels == 2);
  for (int seg = 0; seg < 2; ++seg)
    for (int j = 0; j < 4; ++j)
      for (int c = 0; c < 2; ++c) CHECK(s.at(seg, j, c) == h(seg * 4 + j, c));

  TemporalSegments id = temporal_segmentation(h, 1);
  CHECK(id.segments == 8);
  CHECK(bitwise_equal(temporal_unsegment(id), h));

  CHECK_THROWS_AS(temporal_segmentation(random_mat(6, 2, rng), 4), DivisibilityError);
}

TEST_CASE("channel segmentation shape and identity cases") {
  Rng rng(2);
  Mat h = random_mat(8, 8, rng);
  ChannelSegments s = channel_segmentation(h, 4, 4);
  CHECK(s.ranges == 2);
  CHECK(s.groups == 2);
  CHECK(s.gamma_c == 4);
  CHECK(s.gamma_tr == 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(s.at(a, b, i, j) == h(a * 4 + j, b * 4 + i));

  ChannelSegments id = channel_segmentation(h, 1, 1);
  CHECK(id.ranges == 8);
  CHECK(id.groups == 8);
  CHECK(bitwise_equal(channel_unsegment(id), h));

  CHECK_THROWS_AS(channel_segmentation(random_mat(3, 4, rng), 2, 2), DivisibilityError);
}

TEST_CASE("segmentations invert bitwise for random shapes") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int gt = 1 + rng.uniform_int(4);
    const int gc = 1 + rng.uniform_int(4);
    const int gtr = 1 + rng.uniform_int(3);
    const int t = gt * gtr * (1 + rng.uniform_int(5));
    const int c = gc * (1 + rng.uniform_int(5));
    Mat h = random_mat(t, c, rng);
    CHECK(bitwise_equal(temporal_unsegment(temporal_segmentation(h, gt)), h));
    Mat h2 = random_mat(gtr * (1 + rng.uniform_int(5)), c, rng);
    CHECK(bitwise_equal(channel_unsegment(channel_segmentation(h2, gc, gtr)), h2));
  }
}

TEST_CASE("temporal retrieval shapes and attention fibers") {
  ModelConfig cfg = small_block_cfg(8, 4, 4, 1);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(4);
  Mat z_prev = random_mat(16, 8, rng);
  Mat xvec = random_mat(1, 6, rng);

  auto [h_c, a_t] = temporal_retrieval(ps, z_prev, xvec, 1, 4);
  CHECK(h_c.rows == 4);
  CHECK(h_c.cols == 8);
  CHECK(a_t.rows == 4);
  CHECK(a_t.cols == 4);
  check_rows_are_distributions(a_t);
}

TEST_CASE("temporal retrieval: uniform ablation averages the conv features") {
  ModelConfig cfg = small_block_cfg(8, 4, 4, 1);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(5);
  Mat z_prev = random_mat(16, 8, rng);
  Mat xvec = random_mat(1, 6, rng);

  auto [h_c, a_t] = temporal_retrieval(ps, z_prev, xvec, 1, 4, /*uniform=*/true);
  for (int i = 0; i < a_t.rows; ++i)
    for (int j = 0; j < a_t.cols; ++j) CHECK(a_t(i, j) == doctest::Approx(0.25).epsilon(1e-12));

  Mat conv = oracle_conv3x3(z_prev, ps.at("tcr.block1.conv.k"), ps.at("tcr.block1.conv.b")(0, 0));
  for (int s = 0; s < 4; ++s)
    for (int c = 0; c < 8; ++c) {
      Real mean = 0;
      for (int j = 0; j < 4; ++j) mean += conv(s * 4 + j, c);
      mean /= 4;
      CHECK(h_c(s, c) == doctest::Approx(mean).epsilon(1e-9));
    }
}

TEST_CASE("temporal retrieval: identical key rows give exactly uniform weights") {
  ModelConfig cfg = small_block_cfg(8, 4, 4, 1);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(6);
  Mat z_prev(16, 8);
  // Every frame identical; conv output rows coincide, so all logits match.
  Mat frame = random_mat(1, 8, rng);
  for (int t = 0; t < 16; ++t)
    for (int c = 0; c < 8; ++c) z_prev(t, c) = frame(0, c);
  Mat xvec = random_mat(1, 6, rng);

  auto [h_c, a_t] = temporal_retrieval(ps, z_prev, xvec, 1, 4);
  for (int i = 0; i < a_t.rows; ++i)
    for (int j = 0; j < a_t.cols; ++j) CHECK(a_t(i, j) == 0.25);
}

TEST_CASE("channel retrieval shapes and degenerate cases") {
  ModelConfig cfg = small_block_cfg(8, 4, 4, 4);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(7);
  Mat h_c = random_mat(8, 8, rng);
  Mat xvec = random_mat(1, 6, rng);

  auto [z, a_c] = channel_retrieval(ps, h_c, xvec, 1, 4, 4);
  CHECK(z.rows == 8);
  CHECK(z.cols == 2);
  CHECK(a_c.rows == 2 * 2);  // ranges * groups
  CHECK(a_c.cols == 4);
  check_rows_are_distributions(a_c);
}

TEST_CASE("channel retrieval: identical channels within a segment give uniform fibers") {
  ModelConfig cfg = small_block_cfg(8, 4, 4, 4);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(8);
  // One strip per (range, group) replicated across the gamma_c channels.
  Mat strip = random_mat(8, 2, rng);
  Mat h_c(8, 8);
  for (int t = 0; t < 8; ++t)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 4; ++i) h_c(t, b * 4 + i) = strip(t, b);
  Mat xvec = random_mat(1, 6, rng);

  auto [z, a_c] = channel_retrieval(ps, h_c, xvec, 1, 4, 4);
  for (int r = 0; r < a_c.rows; ++r)
    for (int i = 0; i < 4; ++i) CHECK(a_c(r, i) == 0.25);
  // The weighted sum of identical strips is the strip itself.
  CHECK(max_abs_diff(z, strip) < 1e-12);
}

TEST_CASE("channel retrieval: gamma_c = 1 is the identity") {
  ModelConfig cfg = small_block_cfg(8, 2, 1, 2);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(9);
  Mat h_c = random_mat(6, 8, rng);
  Mat xvec = random_mat(1, 6, rng);
  auto [z, a_c] = channel_retrieval(ps, h_c, xvec, 1, 1, 2);
  CHECK(bitwise_equal(z, h_c));
  for (Real w : a_c.a) CHECK(w == 1.0);
}

TEST_CASE("block with unit factors reduces to the conv output") {
  ModelConfig cfg = small_block_cfg(8, 1, 1, 1);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(10);
  Mat z_prev = random_mat(12, 8, rng);
  Mat xvec = random_mat(1, 6, rng);

  Tape t;
  Ctx c{t, ps};
  TcrBlockVars blk =
      tcr_block_forward_t(c, t.leaf(z_prev, false), t.leaf(xvec, false), 1, cfg);
  Mat conv = oracle_conv3x3(z_prev, ps.at("tcr.block1.conv.k"), ps.at("tcr.block1.conv.b")(0, 0));
  CHECK(max_abs_diff(t.val(blk.z), conv) < 1e-9);
}

TEST_CASE("uniform-attention ablation equals nested-loop blocked mean pooling") {
  ModelConfig cfg = small_block_cfg(16, 4, 4, 4);
  cfg.ablation.uniform_temporal_attn = {true};
  cfg.ablation.uniform_channel_attn = {true};
  cfg = validate_config(cfg);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Mat z_prev = random_mat(16, 16, rng);
    Mat xvec = random_mat(1, 6, rng);
    Tape t;
    Ctx c{t, ps};
    TcrBlockVars blk =
        tcr_block_forward_t(c, t.leaf(z_prev, false), t.leaf(xvec, false), 1, cfg);
    Mat conv =
        oracle_conv3x3(z_prev, ps.at("tcr.block1.conv.k"), ps.at("tcr.block1.conv.b")(0, 0));
    Mat expected = oracle_block_mean(conv, 4, 4);
    CHECK(t.val(blk.z).rows == expected.rows);
    CHECK(t.val(blk.z).cols == expected.cols);
    CHECK(max_abs_diff(t.val(blk.z), expected) < 1e-6);
  }
}

TEST_CASE("full retrieval: published shape chain at T=128") {
  ModelConfig cfg = default_config();
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(12);
  Mat mel = random_mat(128, cfg.mel_dim, rng);
  Mat xvec = random_mat(1, cfg.xvec_dim, rng);

  SpeakerRetrievalOutput out = mtcr_forward(ps, mel, xvec, cfg);
  CHECK(out.z0.rows == 128);
  CHECK(out.z0.cols == 256);
  REQUIRE(out.z.size() == 3);
  CHECK(out.z[0].rows == 32);
  CHECK(out.z[0].cols == 64);
  CHECK(out.z[1].rows == 8);
  CHECK(out.z[1].cols == 16);
  CHECK(out.z[2].rows == 2);
  CHECK(out.z[2].cols == 4);
  // Attention-map shapes per level.
  CHECK(out.a_t_shape[0] == std::array<int, 3>{32, 1, 4});
  CHECK(out.a_t_shape[1] == std::array<int, 3>{8, 1, 4});
  CHECK(out.a_t_shape[2] == std::array<int, 3>{2, 1, 4});
  CHECK(out.a_c_shape[0] == std::array<int, 4>{2, 64, 1, 4});
  CHECK(out.a_c_shape[1] == std::array<int, 4>{2, 16, 1, 4});
  CHECK(out.a_c_shape[2] == std::array<int, 4>{2, 4, 1, 4});
  for (const Mat& m : out.a_t) check_rows_are_distributions(m);
  for (const Mat& m : out.a_c) check_rows_are_distributions(m);
}

TEST_CASE("active_blocks truncates the stack") {
  ModelConfig cfg = default_config();
  cfg.ablation.active_blocks = 2;
  cfg = validate_config(cfg);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(13);
  Mat mel = random_mat(128, cfg.mel_dim, rng);
  Mat xvec = random_mat(1, cfg.xvec_dim, rng);
  SpeakerRetrievalOutput out = mtcr_forward(ps, mel, xvec, cfg);
  CHECK(out.z.size() == 2);
  CHECK(out.z.back().rows == 8);
  CHECK(out.z.back().cols == 16);
}

TEST_CASE("length that misses the required multiple is rejected") {
  ModelConfig cfg = default_config();
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(14);
  Mat mel = random_mat(100, cfg.mel_dim, rng);
  Mat xvec = random_mat(1, cfg.xvec_dim, rng);
  try {
    mtcr_forward(ps, mel, xvec, cfg);
    FAIL("expected DivisibilityError");
  } catch (const DivisibilityError& e) {
    CHECK(std::string(e.what()).find("64") != std::string::npos);
  }
}

TEST_CASE("attention fibers normalize across randomized configurations") {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    ModelConfig cfg;
    cfg.mel_dim = 4 + rng.uniform_int(5);
    cfg.bnf_dim = 4;
    cfg.xvec_dim = 3 + rng.uniform_int(4);
    cfg.model_dim = 4;
    cfg.n_tcr_blocks = 1 + rng.uniform_int(3);
    const int gt_pick[3] = {1, 2, 4};
    cfg.gamma_t = gt_pick[rng.uniform_int(3)];
    cfg.gamma_c = gt_pick[rng.uniform_int(3)];
    cfg.gamma_tr.assign(static_cast<size_t>(cfg.n_tcr_blocks), 1);
    for (auto& g : cfg.gamma_tr) g = 1 + rng.uniform_int(3);
    int cpow = 1;
    for (int l = 0; l < cfg.n_tcr_blocks; ++l) cpow *= cfg.gamma_c;
    cfg.prenet_channels = cpow * (1 + rng.uniform_int(3));
    cfg = validate_config(cfg);

    ParamStore ps = tcr_params_for(cfg, 1000 + static_cast<uint64_t>(trial));
    const int mult = cfg.retrieval_multiple();
    const int frames = mult * (1 + rng.uniform_int(3));
    Mat mel = random_mat(frames, cfg.mel_dim, rng, 2.0);
    Mat xvec = random_mat(1, cfg.xvec_dim, rng, 2.0);
    SpeakerRetrievalOutput out = mtcr_forward(ps, mel, xvec, cfg);
    for (const Mat& m : out.a_t) check_rows_are_distributions(m);
    for (const Mat& m : out.a_c) check_rows_are_distributions(m);
  }
}

TEST_CASE("scaling the speaker embedding preserves fiber argmaxes at init") {
  // Query projections carry zero-initialized biases, so against fixed keys
  // the logits scale monotonically with the embedding. The guarantee is
  // per retrieval site: deeper blocks see rescaled inputs, not rescaled
  // logits, so only the per-site form holds.
  ModelConfig cfg = small_block_cfg(8, 4, 4, 4);
  ParamStore ps = tcr_params_for(cfg);
  Rng rng(16);
  auto argmax_rows_match = [](const Mat& x, const Mat& y) {
    for (int i = 0; i < x.rows; ++i) {
      int ax = 0, ay = 0;
      for (int j = 1; j < x.cols; ++j) {
        if (x(i, j) > x(i, ax)) ax = j;
        if (y(i, j) > y(i, ay)) ay = j;
      }
      if (ax != ay) return false;
    }
    return true;
  };
  for (int trial = 0; trial < 10; ++trial) {
    Mat z_prev = random_mat(16, 8, rng);
    Mat h_in = random_mat(16, 8, rng);
    Mat xvec = random_mat(1, 6, rng);
    Mat scaled = xvec;
    for (auto& v : scaled.a) v *= 3.7;

    auto [h1, at1] = temporal_retrieval(ps, z_prev, xvec, 1, 4);
    auto [h2, at2] = temporal_retrieval(ps, z_prev, scaled, 1, 4);
    CHECK(argmax_rows_match(at1, at2));

    auto [z1, ac1] = channel_retrieval(ps, h_in, xvec, 1, 4, 4);
    auto [z2, ac2] = channel_retrieval(ps, h_in, scaled, 1, 4, 4);
    CHECK(argmax_rows_match(ac1, ac2));
  }
}

TEST_CASE("gradient flows through retrieval into every block parameter") {
  ModelConfig cfg = tiny_config();
  ParamStore ps;
  Rng prng(17);
  init_tcr_params(ps, cfg, prng);
  Rng rng(18);
  Mat mel = random_mat(cfg.retrieval_multiple() * 2, cfg.mel_dim, rng);
  Mat xvec = random_mat(1, cfg.xvec_dim, rng);

  Tape t;
  Ctx c{t, ps};
  RetrievalVars r = mtcr_forward_t(c, t.leaf(mel, false), t.leaf(xvec, false), cfg);
  Var loss = t.mean_all(t.mul(r.z.back(), r.z.back()));
  for (size_t l = 0; l + 1 < r.z.size(); ++l)
    loss = t.add(loss, t.mean_all(t.mul(r.z[l], r.z[l])));
  t.backward(loss);
  for (const auto& [name, id] : c.bound) {
    Mat g = t.grad(Var{&t, id});
    Real norm = 0;
    for (Real v : g.a) norm += v * v;
    INFO("param ", name);
    CHECK(norm > 0);
  }
}
