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

#include "mtcr/mat.hpp"

namespace mtcr {

struct AttentionResult {
  Mat output;   // 1 x e
  Mat weights;  // 1 x n, nonnegative, sums to 1
};

// Scaled-dot attention for a single query: weights = softmax(q k^T / scale),
// output = weights * values. Stabilized by max-subtraction.
AttentionResult attend(const Mat& query, const Mat& keys, const Mat& values, Real scale);

}  // namespace mtcr
