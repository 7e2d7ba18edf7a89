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

#include <cmath>
#include <thread>

#include "mtcr/errors.hpp"
#include "mtcr/losses.hpp"
#include "mtcr/model.hpp"
#include "mtcr/rng.hpp"

using namespace mtcr;

namespace {

FeatureBundle random_bundle(const ModelConfig& cfg, Rng& rng, int frames,
                            const std::string& spk) {
  FeatureBundle b;
  b.mel = random_mat(frames, cfg.mel_dim, rng, 0.5);
  b.bnf = random_mat(frames, cfg.bnf_dim, rng, 0.5);
  b.pitch = Mat(frames, cfg.pitch_dim);
  for (auto& v : b.pitch.a) v = static_cast<Real>(rng.uniform(0.05, 1.0));
  b.xvec = random_mat(1, cfg.xvec_dim, rng);
  b.speaker_id = spk;
  b.true_length = frames;
  return b;
}

}  // namespace

TEST_CASE("align_speaker_keys: uniform maps mean-pool, one-hot maps select") {
  ParamStore unused;
  const int gamma_t = 4;
  Rng rng(1);
  Mat bnf = random_mat(16, 3, rng);

  Mat uniform(4, 4);
  uniform.fill(0.25);
  Mat pooled = align_speaker_keys(unused, bnf, {uniform}, 1, gamma_t);
  CHECK(pooled.rows == 4);
  for (int s = 0; s < 4; ++s)
    for (int j = 0; j < 3; ++j) {
      Real mean = 0;
      for (int k = 0; k < 4; ++k) mean += bnf(s * 4 + k, j);
      CHECK(pooled(s, j) == doctest::Approx(mean / 4).epsilon(1e-12));
    }

  Mat onehot(4, 4);
  for (int s = 0; s < 4; ++s) onehot(s, s % 4) = 1;  // picks frame s*4 + (s%4)
  Mat picked = align_speaker_keys(unused, bnf, {onehot}, 1, gamma_t);
  for (int s = 0; s < 4; ++s)
    for (int j = 0; j < 3; ++j) CHECK(picked(s, j) == bnf(s * 4 + (s % 4), j));
}

TEST_CASE("align_speaker_keys: cumulative levels shrink by gamma_t each") {
  ParamStore unused;
  Rng rng(2);
  Mat bnf = random_mat(128, 5, rng);
  Mat a1(32, 4), a2(8, 4);
  a1.fill(0.25);
  a2.fill(0.25);
  Mat out = align_speaker_keys(unused, bnf, {a1, a2}, 2, 4);
  CHECK(out.rows == 8);  // 128 / 16
  CHECK(out.cols == 5);

  Mat wrong = random_mat(120, 5, rng);
  CHECK_THROWS_AS(align_speaker_keys(unused, wrong, {a1, a2}, 2, 4), LengthMismatch);
}

TEST_CASE("fusion block: single key broadcasts its value to every frame") {
  ModelConfig cfg = tiny_config();
  Model m = build_model(cfg);
  Rng rng(3);
  const int t_src = 8;
  Mat state = random_mat(t_src, cfg.model_dim, rng);
  Mat bnf_src = random_mat(t_src, cfg.bnf_dim, rng);
  Mat spk_keys = random_mat(1, cfg.bnf_dim, rng);
  Mat z_s = random_mat(1, cfg.channels_at(2), rng);

  Tape t;
  Ctx c{t, m.params};
  auto [out, attn] = fusion_block_forward_t(c, "dec.fuse1", t.leaf(state, false),
                                            t.leaf(bnf_src, false), t.leaf(spk_keys, false),
                                            t.leaf(z_s, false));
  const Mat& a = t.val(attn);
  CHECK(a.rows == t_src);
  CHECK(a.cols == 1);
  for (int i = 0; i < t_src; ++i) CHECK(a(i, 0) == doctest::Approx(1.0));
}

TEST_CASE("fusion block: zero value path reduces to the conv-residual transform") {
  ModelConfig cfg = tiny_config();
  Model m = build_model(cfg);
  m.params.at("dec.fuse1.v.w").fill(0);
  m.params.at("dec.fuse1.v.b").fill(0);
  Rng rng(4);
  const int t_src = 8;
  Mat state = random_mat(t_src, cfg.model_dim, rng);
  Mat bnf_src = random_mat(t_src, cfg.bnf_dim, rng);

  auto run = [&](const Mat& keys, const Mat& z_s) {
    Tape t;
    Ctx c{t, m.params};
    auto [out, attn] = fusion_block_forward_t(c, "dec.fuse1", t.leaf(state, false),
                                              t.leaf(bnf_src, false), t.leaf(keys, false),
                                              t.leaf(z_s, false));
    return t.val(out);
  };
  Mat keys_a = random_mat(4, cfg.bnf_dim, rng);
  Mat z_a = random_mat(4, cfg.channels_at(2), rng);
  Mat keys_b = random_mat(4, cfg.bnf_dim, rng);
  Mat z_b = random_mat(4, cfg.channels_at(2), rng);
  // Speaker inputs no longer influence the output.
  CHECK(bitwise_equal(run(keys_a, z_a), run(keys_b, z_b)));
}

TEST_CASE("decode: cross-attention shapes at the published defaults") {
  ModelConfig cfg = default_config();
  Model m = build_model(cfg);
  Rng rng(5);
  FeatureBundle src = random_bundle(cfg, rng, 128, "a");
  FeatureBundle spk = random_bundle(cfg, rng, 192, "b");

  ConversionResult r = convert(m, src, spk);
  CHECK(r.mel.rows == 128);
  CHECK(r.mel.cols == 80);
  REQUIRE(r.cross_attn.size() == 3);
  // Applied coarse-to-fine: levels 3, 2, 1.
  CHECK(r.cross_attn_level == std::vector<int>{3, 2, 1});
  CHECK(r.cross_attn[0].rows == 128);
  CHECK(r.cross_attn[0].cols == 3);    // 192 / 64
  CHECK(r.cross_attn[1].cols == 12);   // 192 / 16
  CHECK(r.cross_attn[2].cols == 48);   // 192 / 4
  for (const Mat& a : r.cross_attn)
    for (int i = 0; i < a.rows; ++i) {
      Real sum = 0;
      for (int j = 0; j < a.cols; ++j) {
        CHECK(a(i, j) >= 0);
        sum += a(i, j);
      }
      CHECK(std::abs(sum - 1) < 1e-6);
    }
}

TEST_CASE("decode: output length is pinned to the padded source length") {
  ModelConfig cfg = tiny_config();
  Model m = build_model(cfg);
  Rng rng(6);
  const int mult = cfg.temporal_multiple();
  for (int src_len : {5, 8, 13, 24}) {
    for (int spk_len : {8, 17}) {
      FeatureBundle src = random_bundle(cfg, rng, src_len, "a");
      FeatureBundle spk = random_bundle(cfg, rng, spk_len, "b");
      ConversionResult r = convert(m, src, spk);
      const int padded = ((src_len + mult - 1) / mult) * mult;
      CHECK(r.mel.rows == padded);
      CHECK(r.mel.cols == cfg.mel_dim);
    }
  }
}

TEST_CASE("decode: identical inputs produce bitwise-identical spectrograms") {
  ModelConfig cfg = tiny_config();
  Model m = build_model(cfg);
  Rng rng(7);
  FeatureBundle src = random_bundle(cfg, rng, 16, "a");
  FeatureBundle spk = random_bundle(cfg, rng, 24, "b");
  ConversionResult r1 = convert(m, src, spk);
  ConversionResult r2 = convert(m, src, spk);
  CHECK(bitwise_equal(r1.mel, r2.mel));
  CHECK(bitwise_equal(r1.mel_pre, r2.mel_pre));
}

TEST_CASE("decode with one active block consumes exactly Z_s_1") {
  ModelConfig cfg = tiny_config();
  cfg.ablation.active_blocks = 1;
  cfg = validate_config(cfg);
  Model m = build_model(cfg);
  Rng rng(8);
  FeatureBundle src = random_bundle(cfg, rng, 16, "a");
  FeatureBundle spk = random_bundle(cfg, rng, 16, "b");
  ConversionResult r = convert(m, src, spk);
  CHECK(r.cross_attn.size() == 1);
  CHECK(r.cross_attn_level == std::vector<int>{1});
  CHECK(r.retrieval.z.size() == 1);
}

TEST_CASE("decode rejects a retrieval with the wrong level count") {
  ModelConfig cfg = tiny_config();
  Model m = build_model(cfg);
  Rng rng(9);
  FeatureBundle spk = random_bundle(cfg, rng, 16, "b");
  FeatureBundle src = random_bundle(cfg, rng, 16, "a");
  FeatureBundle srcp = pad_bundle(src, cfg.temporal_multiple());
  FeatureBundle spkp = pad_bundle(spk, cfg.temporal_multiple());

  Tape t;
  Ctx c{t, m.params};
  SourceRepVars sv = encode_source_t(c, t.leaf(srcp.bnf, false), t.leaf(srcp.pitch, false), cfg);
  RetrievalVars retr = mtcr_forward_t(c, t.leaf(spkp.mel, false), t.leaf(spkp.xvec, false), cfg);
  retr.z.pop_back();
  retr.a_t.pop_back();
  retr.a_c.pop_back();
  CHECK_THROWS_AS(
      decode_t(c, sv, t.leaf(srcp.bnf, false), t.leaf(spkp.bnf, false), retr, cfg),
      ConfigMismatch);
}

TEST_CASE("severing every value path isolates the speaker branch") {
  ModelConfig cfg = tiny_config();
  Model m = build_model(cfg);
  for (int l = 1; l <= cfg.n_tcr_blocks; ++l) {
    m.params.at("dec.fuse" + std::to_string(l) + ".v.w").fill(0);
    m.params.at("dec.fuse" + std::to_string(l) + ".v.b").fill(0);
  }
  Rng rng(10);
  FeatureBundle src = random_bundle(cfg, rng, 16, "a");
  FeatureBundle spk1 = random_bundle(cfg, rng, 16, "b");
  FeatureBundle spk2 = random_bundle(cfg, rng, 24, "c");
  ConversionResult r1 = convert(m, src, spk1);
  ConversionResult r2 = convert(m, src, spk2);
  CHECK(bitwise_equal(r1.mel, r2.mel));
}

TEST_CASE("concurrent conversions over shared parameters agree with serial ones") {
  ModelConfig cfg = tiny_config();
  Model m = build_model(cfg);
  Rng rng(20);
  std::vector<FeatureBundle> srcs, spks;
  std::vector<Mat> expected;
  for (int i = 0; i < 4; ++i) {
    srcs.push_back(random_bundle(cfg, rng, 10 + i, "a"));
    spks.push_back(random_bundle(cfg, rng, 14 + i, "b"));
    expected.push_back(convert(m, srcs.back(), spks.back()).mel);
  }
  std::vector<Mat> got(4);
  std::vector<std::thread> workers;
  for (int i = 0; i < 4; ++i)
    workers.emplace_back([&, i] { got[static_cast<size_t>(i)] = convert(m, srcs[i], spks[i]).mel; });
  for (auto& w : workers) w.join();
  for (int i = 0; i < 4; ++i) CHECK(bitwise_equal(got[static_cast<size_t>(i)], expected[static_cast<size_t>(i)]));
}

TEST_CASE("mel loss gradient reaches the retrieval parameters through decode") {
  ModelConfig cfg = tiny_config();
  Model m = build_model(cfg);
  Rng rng(11);
  FeatureBundle src = pad_bundle(random_bundle(cfg, rng, 14, "a"), cfg.temporal_multiple());
  FeatureBundle spk = pad_bundle(random_bundle(cfg, rng, 16, "b"), cfg.temporal_multiple());

  Tape t;
  Ctx c{t, m.params};
  SpeakerSideVars ssv{t.leaf(spk.mel, false), t.leaf(spk.bnf, false), t.leaf(spk.xvec, false)};
  ConvertVars v = convert_t(c, t.leaf(src.bnf, false), t.leaf(src.pitch, false), ssv, cfg);
  Var loss = mel_loss_t(t, v.decode.mel, t.leaf(src.mel, false), src.true_length);
  t.backward(loss);

  Real tcr_norm = 0;
  for (const auto& [name, id] : c.bound) {
    if (name.rfind("tcr.", 0) != 0) continue;
    Mat g = t.grad(Var{&t, id});
    for (Real x : g.a) tcr_norm += x * x;
  }
  CHECK(tcr_norm > 0);
}
