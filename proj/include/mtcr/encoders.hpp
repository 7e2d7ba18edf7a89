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

#pragma once

#include "mtcr/config.hpp"
#include "mtcr/nn.hpp"
#include "mtcr/tape.hpp"

namespace mtcr {

// Content, pitch, and rhythm representations of the source utterance and
// their sum; pitch/content are length-preserving, rhythm is one vector
// broadcast over time in z_add.
struct SourceRepresentation {
  Mat content;  // T x model_dim
  Mat pitch;    // T x model_dim
  Mat rhythm;   // 1 x model_dim
  Mat z_add;    // T x model_dim
};

struct SourceRepVars {
  Var content, pitch, rhythm, z_add;
};

// Self-attention + feed-forward stack over the bottleneck features.
Var content_encode_t(Ctx& c, Var bnf, const ModelConfig& cfg);
// Per-frame lift, 8x average pooling over time, nearest-neighbor repeat
// back to full length.
Var pitch_encode_t(Ctx& c, Var pitch, const ModelConfig& cfg,
                   int downsample = kPitchDownsample);
// Strided conv stack, mean pooling, affine head; one vector per utterance.
Var rhythm_encode_t(Ctx& c, Var bnf, const ModelConfig& cfg);
SourceRepVars combine_t(Ctx& c, Var content, Var pitch, Var rhythm);

SourceRepVars encode_source_t(Ctx& c, Var bnf, Var pitch, const ModelConfig& cfg);

void init_encoder_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

// Plain wrappers.
Mat content_encode(ParamStore& ps, const Mat& bnf, const ModelConfig& cfg);
Mat pitch_encode(ParamStore& ps, const Mat& pitch, const ModelConfig& cfg,
                 int downsample = kPitchDownsample);
Mat rhythm_encode(ParamStore& ps, const Mat& bnf, const ModelConfig& cfg);
SourceRepresentation combine(const Mat& content, const Mat& pitch, const Mat& rhythm);
SourceRepresentation encode_source(ParamStore& ps, const Mat& bnf, const Mat& pitch,
                                   const ModelConfig& cfg);

}  // namespace mtcr
