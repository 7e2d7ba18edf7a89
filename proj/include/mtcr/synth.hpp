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

#include "mtcr/config.hpp"
#include "mtcr/features.hpp"
#include "mtcr/rng.hpp"

namespace mtcr {

struct SyntheticSpeaker {
  std::string id;
  Mat timbre_basis;   // content_dim x mel_dim
  Mat timbre_bias;    // 1 x mel_dim constant coloration
  Real pitch_mean = 0.5, pitch_spread = 0.15;
  Mat xvec_anchor;    // 1 x D, unit norm
};

struct SynthOptions {
  int n_speakers = 8;
  int utts_per_speaker = 25;
  int len_min = 96;
  int len_max = 160;
  uint64_t seed = 1;
  int content_dim = 6;
  Real bnf_noise = 0.01;
  Real mel_noise = 0.02;
  Real xvec_noise = 0.05;
  Real pitch_amp = 2.0;     // strength of the pitch trace mixed into mel
  Real unvoiced_frac = 0.12;
};

// Deterministic synthetic corpus. By construction bnf depends on content
// only while mel depends on (content, pitch, speaker); the pitch trace is
// embedded along a global probe direction so evaluations can read an
// approximate pitch contour back out of any mel.
struct Corpus {
  std::vector<FeatureBundle> utts;
  std::vector<SyntheticSpeaker> speakers;
  Mat pitch_probe;    // 1 x mel_dim, unit norm
  Mat content_mixer;  // content_dim x bnf_dim
  SynthOptions opts;

  std::vector<int> speaker_of;  // per utterance, index into speakers
  int n_speakers() const { return static_cast<int>(speakers.size()); }
};

Corpus synth_corpus(const ModelConfig& dims, const SynthOptions& opts);

void save_corpus(const std::string& path, const Corpus& corpus);
Corpus load_corpus(const std::string& path);

// Least-squares readout of the embedded pitch trace: T x 1 projection of
// mel onto the probe direction.
Mat estimate_pitch(const Mat& mel, const Mat& probe, Real pitch_amp);

}  // namespace mtcr
