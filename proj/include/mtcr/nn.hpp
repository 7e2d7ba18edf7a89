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

#include <map>
#include <string>

#include "mtcr/mat.hpp"
#include "mtcr/rng.hpp"
#include "mtcr/tape.hpp"

namespace mtcr {

// Named parameter tensors. Creation order is fixed by the explicit
// init inventory, so a given seed always produces the same values.
struct ParamStore {
  std::map<std::string, Mat> params;

  // Uniform fan-in init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mat& create(const std::string& name, int rows, int cols, Rng& rng, int fan_in);
  Mat& create_zero(const std::string& name, int rows, int cols);
  Mat& at(const std::string& name);
  const Mat& at(const std::string& name) const;
  bool has(const std::string& name) const { return params.count(name) > 0; }
  size_t total_scalars() const;
  uint64_t hash() const;
};

// Per-forward binding of parameters onto a tape. Each named parameter is
// materialized as at most one grad-enabled leaf per tape.
struct Ctx {
  Tape& t;
  ParamStore& ps;
  std::map<std::string, int> bound;

  Var P(const std::string& name);
  Var constant(const Mat& m) { return t.leaf(m, false); }
};

// x (T x in) -> x*W + b with W = prefix+".w" (in x out), b = prefix+".b".
Var affine(Ctx& c, const std::string& prefix, Var x);

// Single-feature-map 3x3 convolution over the (time, channel) plane,
// stride 1, replication padding. Weights prefix+".k" (9 x 1) and bias
// prefix+".b" (1 x 1 broadcast).
Var conv_plane3x3(Ctx& c, const std::string& prefix, Var x);
// Same convolution applied with explicit weight/bias vars (shared kernels).
Var conv_plane3x3_with(Ctx& c, Var kernel, Var bias, Var x);

// 1-D convolution along time: kernel size k, given stride, replication
// padding; in channels = x.cols, out channels from the weight shape
// prefix+".w" ((k*in) x out). Output length = ceil(T / stride).
Var conv1d(Ctx& c, const std::string& prefix, Var x, int k, int stride);

// Full-sequence scaled-dot self-attention with learned q/k/v/out
// projections, residual added by the caller.
Var self_attention(Ctx& c, const std::string& prefix, Var x);

// softmax(q k^T / scale) v for row-batched queries.
Var attend_rows(Tape& t, Var q, Var k, Var v, Real scale);

// Cached flat-index builders for gather-based reshapes/convolutions.
IndexPtr plane3x3_index(int rows, int cols);
IndexPtr conv1d_index(int t_in, int channels, int k, int stride);
// (T',C) -> rows (a*B+b)*gc+i, cols gtr with element h[a*gtr+j, b*gc+i]formula.
IndexPtr channel_seg_index(int t_prime, int channels, int gamma_c, int gamma_tr);
// Strips (A*B) x gtr -> (T' x C/gc): out[a*gtr+j, b] = strips[a*B+b, j].
IndexPtr strips_to_time_index(int t_prime, int b_count, int gamma_tr);
// Replication padding: (t_real x cols) -> (t_out x cols), rows >= t_real
// copy the last real row.
IndexPtr pad_rows_index(int t_real, int t_out, int cols);

int conv1d_out_len(int t_in, int stride);

}  // namespace mtcr
