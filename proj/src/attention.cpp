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

#include "mtcr/attention.hpp"

#include "mtcr/errors.hpp"
#include "mtcr/kernels.hpp"

namespace mtcr {

AttentionResult attend(const Mat& query, const Mat& keys, const Mat& values, Real scale) {
  if (query.rows != 1) throw DimensionMismatch("attend: query must be a single row");
  if (query.cols != keys.cols) throw DimensionMismatch("attend: query/key widths differ");
  if (keys.rows != values.rows) throw DimensionMismatch("attend: keys/values row counts differ");
  if (keys.rows < 1) throw DimensionMismatch("attend: need at least one key");
  if (!(scale > 0)) throw DimensionMismatch("attend: scale must be positive");

  AttentionResult r;
  kernels::matmul(query, false, keys, true, r.weights);
  for (auto& v : r.weights.a) v /= scale;
  kernels::softmax_rows(r.weights);
  kernels::matmul(r.weights, false, values, false, r.output);
  return r;
}

}  // namespace mtcr
