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

#include <string>
#include <utility>

#include "mtcr/mat.hpp"

namespace mtcr {

// One utterance's aligned feature streams. mel/bnf/pitch share the first
// axis; true_length is the frame count before padding (rows beyond it
// replicate the last real frame).
struct FeatureBundle {
  Mat mel;    // T x mel_dim
  Mat bnf;    // T x bnf_dim
  Mat pitch;  // T x 1, values in [0,1], 0 marks unvoiced frames
  Mat xvec;   // 1 x D
  std::string speaker_id;
  int true_length = 0;
};

struct PaddedSeq {
  Mat padded;
  int original_length = 0;
};

// Pads rows up to the next multiple by replicating the final real frame.
PaddedSeq pad_to_multiple(const Mat& seq, int multiple);

// Pads mel/bnf/pitch of a bundle to the same multiple; true_length keeps
// the pre-padding frame count.
FeatureBundle pad_bundle(const FeatureBundle& b, int multiple);

}  // namespace mtcr
