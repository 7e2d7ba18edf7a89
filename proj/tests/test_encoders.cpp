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

#include "mtcr/encoders.hpp"
#include "mtcr/errors.hpp"
#include "mtcr/kernels.hpp"
#include "mtcr/rng.hpp"

using namespace mtcr;

namespace {

ModelConfig enc_cfg() {
  ModelConfig c = tiny_config();
  return c;
}

ParamStore enc_params(const ModelConfig& cfg, uint64_t seed = 77) {
  ParamStore ps;
  Rng rng(seed);
  init_encoder_params(ps, cfg, rng);
  return ps;
}

}  // namespace

TEST_CASE("content encoder preserves length") {
  ModelConfig cfg = enc_cfg();
  ParamStore ps = enc_params(cfg);
  Rng rng(1);
  for (int t : {8, 24, 128}) {
    Mat bnf = random_mat(t, cfg.bnf_dim, rng);
    Mat out = content_encode(ps, bnf, cfg);
    CHECK(out.rows == t);
    CHECK(out.cols == cfg.model_dim);
  }
}

TEST_CASE("zero-weight content encoder with identity residuals is the input projection") {
  ModelConfig cfg = enc_cfg();
  ParamStore ps = enc_params(cfg);
  // Zero every block parameter; the residual path then passes the input
  // projection through untouched.
  for (auto& [name, p] : ps.params)
    if (name.rfind("enc.content.b", 0) == 0) p.fill(0);
  Rng rng(2);
  Mat bnf = random_mat(16, cfg.bnf_dim, rng);
  Mat out = content_encode(ps, bnf, cfg);

  Mat proj;
  kernels::matmul(bnf, false, ps.at("enc.content.in.w"), false, proj);
  for (int i = 0; i < proj.rows; ++i)
    for (int j = 0; j < proj.cols; ++j) proj(i, j) += ps.at("enc.content.in.b")(0, j);
  CHECK(max_abs_diff(out, proj) < 1e-12);
}

TEST_CASE("frame order changes the content encoding") {
  ModelConfig cfg = enc_cfg();
  ParamStore ps = enc_params(cfg);
  Rng rng(3);
  Mat bnf = random_mat(8, cfg.bnf_dim, rng);
  Mat permuted = bnf;
  for (int j = 0; j < bnf.cols; ++j) {
    std::swap(permuted(0, j), permuted(5, j));
    std::swap(permuted(2, j), permuted(7, j));
  }
  Mat a = content_encode(ps, bnf, cfg);
  Mat b = content_encode(ps, permuted, cfg);
  CHECK(max_abs_diff(a, b) > 1e-8);
}

TEST_CASE("pitch encoder pools and re-expands") {
  ModelConfig cfg = enc_cfg();
  ParamStore ps = enc_params(cfg);

  // Constant contour: every output frame identical.
  Mat constant(64, 1);
  constant.fill(0.5);
  Mat out = pitch_encode(ps, constant, cfg, 8);
  CHECK(out.rows == 64);
  CHECK(out.cols == cfg.model_dim);
  for (int t = 1; t < 64; ++t)
    for (int j = 0; j < out.cols; ++j) CHECK(out(t, j) == out(0, j));

  // Pooled length is T/8, repeated back: frames within a block coincide.
  Rng rng(4);
  Mat contour(64, 1);
  for (auto& v : contour.a) v = static_cast<Real>(rng.uniform(0.0, 1.0));
  Mat enc = pitch_encode(ps, contour, cfg, 8);
  for (int block = 0; block < 8; ++block)
    for (int t = 1; t < 8; ++t)
      for (int j = 0; j < enc.cols; ++j)
        CHECK(enc(block * 8 + t, j) == enc(block * 8, j));

  CHECK_THROWS_AS(pitch_encode(ps, Mat(60, 1), cfg, 8), DivisibilityError);
}

TEST_CASE("pitch encoder is invariant to permutations within a pooling block") {
  ModelConfig cfg = enc_cfg();
  ParamStore ps = enc_params(cfg);
  Rng rng(5);
  Mat contour(16, 1);
  for (auto& v : contour.a) v = static_cast<Real>(rng.uniform(0.0, 1.0));
  Mat shuffled = contour;
  // Permute inside each 8-frame block only.
  std::swap(shuffled(1, 0), shuffled(6, 0));
  std::swap(shuffled(0, 0), shuffled(3, 0));
  std::swap(shuffled(9, 0), shuffled(14, 0));
  Mat a = pitch_encode(ps, contour, cfg, 8);
  Mat b = pitch_encode(ps, shuffled, cfg, 8);
  CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("rhythm encoder collapses to one vector and is order sensitive") {
  ModelConfig cfg = enc_cfg();
  ParamStore ps = enc_params(cfg);
  Rng rng(6);
  for (int t : {8, 33, 100}) {
    Mat bnf = random_mat(t, cfg.bnf_dim, rng);
    Mat out = rhythm_encode(ps, bnf, cfg);
    CHECK(out.rows == 1);
    CHECK(out.cols == cfg.model_dim);
  }

  Mat bnf = random_mat(8, cfg.bnf_dim, rng);
  Mat reversed(8, cfg.bnf_dim);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < cfg.bnf_dim; ++j) reversed(i, j) = bnf(7 - i, j);
  CHECK(max_abs_diff(rhythm_encode(ps, bnf, cfg), rhythm_encode(ps, reversed, cfg)) > 1e-10);

  // Duration sensitivity: duplicating the utterance changes the vector.
  Mat doubled(16, cfg.bnf_dim);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < cfg.bnf_dim; ++j) doubled(i, j) = bnf(i % 8, j);
  CHECK(max_abs_diff(rhythm_encode(ps, bnf, cfg), rhythm_encode(ps, doubled, cfg)) > 1e-10);
}

TEST_CASE("combine broadcasts rhythm and is linear") {
  Rng rng(7);
  Mat content = random_mat(128, 256, rng);
  Mat pitch = random_mat(128, 256, rng);
  Mat rhythm = random_mat(1, 256, rng);

  SourceRepresentation r = combine(content, pitch, rhythm);
  CHECK(r.z_add.rows == 128);
  CHECK(r.z_add.cols == 256);
  for (int i = 0; i < 128; ++i)
    for (int j = 0; j < 256; ++j)
      CHECK(r.z_add(i, j) == doctest::Approx(content(i, j) + pitch(i, j) + rhythm(0, j)));

  // Zero rhythm: z_add = content + pitch.
  Mat zero(1, 256);
  SourceRepresentation rz = combine(content, pitch, zero);
  for (int i = 0; i < 128; ++i)
    for (int j = 0; j < 256; ++j)
      CHECK(rz.z_add(i, j) == content(i, j) + pitch(i, j));

  // content = pitch = 0: every frame equals rhythm.
  Mat zc(4, 256), zp(4, 256);
  SourceRepresentation rr = combine(zc, zp, rhythm);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 256; ++j) CHECK(rr.z_add(i, j) == rhythm(0, j));

  CHECK_THROWS_AS(combine(content, random_mat(64, 256, rng), rhythm), DimensionMismatch);
  CHECK_THROWS_AS(combine(content, pitch, random_mat(1, 8, rng)), DimensionMismatch);
}

TEST_CASE("contours equal after 8-frame averaging encode identically") {
  ModelConfig cfg = enc_cfg();
  ParamStore ps = enc_params(cfg);
  Mat a(8, 1, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8});
  Mat b(8, 1, {0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1});  // same block mean
  Mat ea = pitch_encode(ps, a, cfg, 8);
  Mat eb = pitch_encode(ps, b, cfg, 8);
  CHECK(max_abs_diff(ea, eb) < 1e-12);
}
