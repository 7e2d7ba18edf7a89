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

namespace mtcr {

// Activations of the style model at three abstraction levels.
struct StyleFeatures {
  Mat h_l;  // after the first conv layer
  Mat h_m;  // after the second conv layer
  Mat h_h;  // 1 x width, after the final affine
};

struct StyleVars {
  Var h_l, h_m, h_h;
};

// Perceptual networks whose parameters are fixed at construction. Gradients
// flow through them into the generator, never into them.
class FrozenModels {
 public:
  FrozenModels() = default;
  FrozenModels(const ModelConfig& cfg, uint64_t seed);

  StyleVars style_t(Tape& t, Var mel) const;
  Var content_t(Tape& t, Var mel) const;  // T x bnf_dim predicted features

  StyleFeatures style(const Mat& mel) const;
  Mat content(const Mat& mel) const;
  // Utterance embedding for the metric stub; never used by losses.
  Mat sv_embed(const Mat& mel) const;

  uint64_t hash() const { return params_.hash(); }
  size_t total_scalars() const { return params_.total_scalars(); }

 private:
  Var bind(Tape& t, const std::string& name) const;
  ModelConfig cfg_;
  ParamStore params_;
};

FrozenModels build_frozen(const ModelConfig& cfg);

}  // namespace mtcr
