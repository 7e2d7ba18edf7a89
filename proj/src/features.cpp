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

#include "mtcr/features.hpp"

#include "mtcr/errors.hpp"

namespace mtcr {

PaddedSeq pad_to_multiple(const Mat& seq, int multiple) {
  if (seq.rows == 0) throw EmptySequence("pad_to_multiple: empty sequence");
  if (multiple < 1) throw BadRange("pad_to_multiple: multiple must be >= 1");
  const int t = seq.rows;
  const int tp = ((t + multiple - 1) / multiple) * multiple;
  PaddedSeq out;
  out.original_length = t;
  if (tp == t) {
    out.padded = seq;
    return out;
  }
  out.padded = Mat(tp, seq.cols);
  for (int i = 0; i < tp; ++i) {
    const int src = i < t ? i : t - 1;
    for (int j = 0; j < seq.cols; ++j) out.padded(i, j) = seq(src, j);
  }
  return out;
}

FeatureBundle pad_bundle(const FeatureBundle& b, int multiple) {
  if (b.mel.rows != b.bnf.rows || b.mel.rows != b.pitch.rows)
    throw LengthMismatch("pad_bundle: mel/bnf/pitch lengths disagree");
  FeatureBundle out = b;
  out.mel = pad_to_multiple(b.mel, multiple).padded;
  out.bnf = pad_to_multiple(b.bnf, multiple).padded;
  out.pitch = pad_to_multiple(b.pitch, multiple).padded;
  out.true_length = b.true_length > 0 ? b.true_length : b.mel.rows;
  return out;
}

}  // namespace mtcr
