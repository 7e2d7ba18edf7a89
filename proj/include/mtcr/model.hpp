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

#include "mtcr/decoder.hpp"
#include "mtcr/features.hpp"

namespace mtcr {

struct Model {
  ModelConfig cfg;
  ParamStore params;
};

// Validates the config and initializes every trainable parameter from
// cfg.seed in a fixed order.
Model build_model(const ModelConfig& cfg);
void init_params(ParamStore& ps, const ModelConfig& cfg);

// Everything one conversion produces on the tape.
struct ConvertVars {
  SourceRepVars source;
  RetrievalVars retrieval;
  DecodeVars decode;
};

// Speaker side of a conversion. mel may be a prediction living on the tape
// (the cycle path); true_length marks its real frames.
struct SpeakerSideVars {
  Var mel;   // padded to the retrieval multiple
  Var bnf;   // same padded length
  Var xvec;  // 1 x D
};

ConvertVars convert_t(Ctx& c, Var src_bnf, Var src_pitch, const SpeakerSideVars& spk,
                      const ModelConfig& cfg);

// Slice a (possibly predicted) mel to its true length and re-pad by
// replication so padded frames never influence downstream consumers.
Var repad_t(Ctx& c, Var mel, int true_length, int multiple);

// Pads both bundles and runs a full conversion with plain-matrix outputs.
ConversionResult convert(Model& m, const FeatureBundle& source, const FeatureBundle& speaker);

}  // namespace mtcr
