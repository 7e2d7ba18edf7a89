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

#include <cstdint>
#include <string>
#include <vector>

#include "mtcr/mat.hpp"

namespace mtcr {

struct LossWeights {
  Real lambda_mel = 4.0;
  Real lambda_sty = 0.1;
  Real lambda_con = 0.01;
  Real lambda_spk = 0.1;
};

struct AblationConfig {
  // Per-block flags; empty means all false. validate_config normalizes to
  // n_tcr_blocks entries.
  std::vector<bool> uniform_temporal_attn;
  std::vector<bool> uniform_channel_attn;
  int active_blocks = -1;  // -1 = all blocks; normalized by validate_config
  bool disable_cycle = false;
  bool disable_style_loss = false;
  bool disable_content_loss = false;
  bool disable_speaker_loss = false;
};

struct ModelConfig {
  int mel_dim = 80;
  int bnf_dim = 256;
  int pitch_dim = 1;
  int xvec_dim = 192;
  int model_dim = 256;
  int prenet_channels = 256;
  int n_tcr_blocks = 3;
  int gamma_t = 4;
  int gamma_c = 4;
  std::vector<int> gamma_tr = {16, 4, 1};
  Real frame_shift_ms = 10.0;
  LossWeights loss_weights;
  Real lr = 1e-5;
  Real lr_decay = 0.5;
  int lr_decay_steps = 50000;
  AblationConfig ablation;
  uint64_t seed = 1234;

  // Sequence lengths the speaker module accepts: lcm over blocks of
  // gamma_t^l * gamma_tr[l]. 64 with the defaults (640 ms at 10 ms shift).
  int retrieval_multiple() const;
  // Padding multiple for full model inputs (also covers the pitch encoder's
  // fixed 8x pooling).
  int temporal_multiple() const;
  // Channel width entering block l (1-based); l=1 sees prenet_channels.
  int channels_at(int level) const;
  int active_blocks() const;
};

// Fixed downsampling rate of the pitch encoder.
inline constexpr int kPitchDownsample = 8;

// Returns the (normalized) config unchanged when all invariants hold,
// otherwise throws ConfigError listing every violated constraint.
ModelConfig validate_config(ModelConfig cfg);

ModelConfig default_config();
// Sub-10^4-parameter configuration for double-precision gradient checking.
ModelConfig tiny_config();
// Reduced-width configuration for CPU training experiments.
ModelConfig desk_config();

// Strict JSON mapping: unknown keys at any level are an error.
ModelConfig config_from_json_text(const std::string& text);
ModelConfig config_from_file(const std::string& path);
std::string config_to_json_text(const ModelConfig& cfg);

}  // namespace mtcr
