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

#include <optional>

#include "mtcr/metrics.hpp"
#include "mtcr/model.hpp"
#include "mtcr/synth.hpp"

namespace mtcr {

struct EvalOptions {
  int n_trials = 64;
  uint64_t seed = 2024;
  // Optional external word-error-rate evaluator: a command that receives
  // the path of a container holding every converted mel and prints a rate.
  std::string wer_command;
};

struct EvalReport {
  Real eer = 0;
  Real threshold = 0;
  Real speaker_acc = 0;
  Real p_lf0_mean = 0;
  int n_trials = 0;
  std::optional<Real> wer;
};

// EER threshold from all ground-truth utterance pairs of the corpus, then
// sampled cross-speaker conversion trials scored against it.
EvalReport evaluate_conversion(Model& model, const FrozenModels& frozen, const Corpus& corpus,
                               const EvalOptions& opts = {});

std::string report_to_json(const EvalReport& r);

}  // namespace mtcr
