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

#include <utility>
#include <vector>

#include "mtcr/frozen.hpp"
#include "mtcr/mat.hpp"

namespace mtcr {

Real cosine(const Mat& a, const Mat& b);

// Pearson correlation over voiced frames (both contours nonzero).
Real pearson_lf0(const Mat& src_pitch, const Mat& conv_pitch);

struct EerResult {
  Real threshold = 0;
  Real eer = 0;
};

// Operating point where false-accept and false-reject rates meet, linearly
// interpolated between adjacent candidate thresholds. Scores are
// (similarity, same-speaker) trials; accept means score >= threshold.
EerResult eer_threshold(const std::vector<std::pair<Real, bool>>& scores);

// Fraction of (converted, target) pairs whose stub-embedding cosine clears
// the threshold.
Real speaker_accuracy(const std::vector<Mat>& converted_mels,
                      const std::vector<Mat>& target_mels, const FrozenModels& sv_stub,
                      Real threshold);

}  // namespace mtcr
