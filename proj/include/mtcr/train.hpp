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

#include <functional>

#include "mtcr/losses.hpp"

namespace mtcr {

// Per-parameter first/second-moment adaptive optimizer.
struct AdamState {
  Real beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::map<std::string, Mat> m, v;

  void step(ParamStore& ps, const std::map<std::string, Mat>& grads, Real lr);
};

Real lr_schedule(long step, const ModelConfig& cfg);

struct TrainState {
  Model model;
  AdamState opt;
  long step = 0;
  long epoch = 0;
  Rng rng;
};

TrainState init_train_state(const ModelConfig& cfg);

// One optimizer update on one X/Y pair (or a batch of pairs; the gradient
// is the mean over members). Returns the mean loss breakdown.
LossBreakdown train_step(const FeatureBundle& x, const FeatureBundle& y, TrainState& state,
                         const FrozenModels& frozen);
LossBreakdown train_step_batch(const std::vector<std::pair<const FeatureBundle*, const FeatureBundle*>>& batch,
                               TrainState& state, const FrozenModels& frozen);

struct FitOptions {
  int epochs = 1;
  long max_steps = -1;  // <0: run all epochs
  int batch_size = 4;
  int ckpt_interval = 200;
  std::string out_dir;  // empty: no checkpoints / logs written
  std::function<void(long, const LossBreakdown&)> on_step;
};

// Per-epoch shuffled pairing (Y drawn from a different speaker), batches
// assembled by length bucketing, checkpoints at the configured interval.
void fit(const std::vector<FeatureBundle>& corpus, TrainState& state,
         const FrozenModels& frozen, const FitOptions& opts);

void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

// NDJSON record for the loss log: step, lr, every term.
std::string breakdown_record(long step, Real lr, const LossBreakdown& b);

}  // namespace mtcr
