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

#include <vector>

#include "mtcr/encoders.hpp"
#include "mtcr/tcr.hpp"

namespace mtcr {

// Converted spectrogram plus every diagnostic the decoder produces.
// cross_attn is ordered by application (deepest retrieval level first);
// cross_attn_level[i] names the level consumed by entry i.
struct ConversionResult {
  Mat mel;      // T_src x mel_dim, after the postnet
  Mat mel_pre;  // pre-postnet prediction
  std::vector<Mat> cross_attn;
  std::vector<int> cross_attn_level;
  SpeakerRetrievalOutput retrieval;
  SourceRepresentation source_rep;
};

struct DecodeVars {
  Var mel, mel_pre;
  std::vector<Var> cross_attn;
  std::vector<int> cross_attn_level;
};

// Pools the speaker utterance's bottleneck features through the first
// `level` temporal attention maps so key rows match rows(Z_s_level).
Var align_speaker_keys_t(Ctx& c, Var bnf_spk, const RetrievalVars& retr, int level,
                         int gamma_t);

// One fusion block: bnf-keyed cross-attention into the state plus a
// conv/affine residual refinement.
std::pair<Var, Var> fusion_block_forward_t(Ctx& c, const std::string& prefix, Var state,
                                           Var bnf_src, Var spk_keys, Var z_s);

DecodeVars decode_t(Ctx& c, const SourceRepVars& src, Var bnf_src, Var bnf_spk,
                    const RetrievalVars& retr, const ModelConfig& cfg);

void init_decoder_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

// Plain wrappers.
Mat align_speaker_keys(ParamStore& ps, const Mat& bnf_spk,
                       const std::vector<Mat>& a_t_maps, int level, int gamma_t);

}  // namespace mtcr
