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

// Data-parallel inner loops of the model. Every kernel has a serial
// reference variant (the _serial suffix) that the OpenMP path must match
// bitwise: parallelism is always over independent output rows, with the
// per-row arithmetic identical to the reference, so results do not depend
// on the thread count.
namespace mtcr::kernels {

bool parallel_enabled();
void set_parallel(bool on);

// out = op(A) * op(B), optionally accumulating into out.
// Shapes: ta=false,tb=false: (m,k)*(k,n); ta only: (k,m)^T*(k,n);
// tb only: (m,k)*(n,k)^T. ta&&tb is not supported.
void matmul(const Mat& A, bool ta, const Mat& B, bool tb, Mat& out, bool accumulate = false);
void matmul_serial(const Mat& A, bool ta, const Mat& B, bool tb, Mat& out, bool accumulate = false);

// Row-wise stabilized softmax, in place.
void softmax_rows(Mat& x);
void softmax_rows_serial(Mat& x);

void tanh_map(const Mat& x, Mat& out);
void tanh_map_serial(const Mat& x, Mat& out);

// out[s,:] = sum_j w(s,j) * v(s*g + j, :) with g = w.cols.
void seg_weighted_sum(const Mat& w, const Mat& v, Mat& out);
void seg_weighted_sum_serial(const Mat& w, const Mat& v, Mat& out);

}  // namespace mtcr::kernels
