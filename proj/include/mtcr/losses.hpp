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

#include "mtcr/frozen.hpp"
#include "mtcr/model.hpp"

namespace mtcr {

// One objective term: raw value, its configured weight, and the weighted
// contribution that enters the total.
struct LossTerm {
  std::string name;
  Real raw = 0;
  Real weight = 0;
  Real contribution = 0;
};

struct LossBreakdown {
  std::vector<LossTerm> terms;
  Real total = 0;
  const LossTerm* find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }
  Real raw(const std::string& name) const;
};

// Tape-level losses. Masking: every loss reads only the first true_length
// frames of its arguments, so padded rows can never affect the value.
Var mse_t(Tape& t, Var a, Var b);
Var mel_loss_t(Tape& t, Var pred, Var target, int true_length);
Var style_loss_t(const FrozenModels& frozen, Tape& t, Var pred_mel, Var ref_mel);
Var content_loss_t(const FrozenModels& frozen, Tape& t, Var pred_mel, Var ref_mel);
Var speaker_loss_t(Tape& t, const RetrievalVars& ref, const RetrievalVars& pred);

struct TermVar {
  std::string name;
  Var raw;
  Real weight;
};
struct TotalLossVars {
  Var total;
  std::vector<TermVar> terms;
};

// Bundles must already be padded to cfg.temporal_multiple().
TotalLossVars paired_loss_t(Ctx& c, const FrozenModels& frozen, const FeatureBundle& x,
                            const ModelConfig& cfg);
TotalLossVars unpaired_loss_t(Ctx& c, const FrozenModels& frozen, const FeatureBundle& x,
                              const FeatureBundle& y, const ModelConfig& cfg);
TotalLossVars total_loss_t(Ctx& c, const FrozenModels& frozen, const FeatureBundle& x,
                           const FeatureBundle& y, const ModelConfig& cfg);

LossBreakdown extract_breakdown(Tape& t, const TotalLossVars& v);
// Throws NonFiniteLoss naming the first non-finite term.
void check_finite(const LossBreakdown& b);

// Plain-matrix entry points.
Real mel_loss(const Mat& pred, const Mat& target);
Real style_loss(const FrozenModels& frozen, const Mat& pred_mel, const Mat& ref_mel);
Real content_loss(const FrozenModels& frozen, const Mat& pred_mel, const Mat& ref_mel);
Real speaker_loss(const SpeakerRetrievalOutput& ref, const SpeakerRetrievalOutput& pred);
LossBreakdown paired_loss(Model& m, const FrozenModels& frozen, const FeatureBundle& x);
LossBreakdown unpaired_loss(Model& m, const FrozenModels& frozen, const FeatureBundle& x,
                            const FeatureBundle& y);
LossBreakdown total_loss(Model& m, const FrozenModels& frozen, const FeatureBundle& x,
                         const FeatureBundle& y);

}  // namespace mtcr
