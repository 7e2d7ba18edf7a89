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

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "mtcr/config.hpp"
#include "mtcr/mat.hpp"
#include "mtcr/nn.hpp"

namespace mtcr {

// Segmented views used by the retrieval steps. Both segmentations are pure
// reshapes; unsegment() restores the original matrix bitwise.

// (T x C) -> (T/gamma_t, gamma_t, C): seg(s, j, c) = h(s*gamma_t + j, c).
struct TemporalSegments {
  int segments = 0, gamma_t = 0, channels = 0;
  std::vector<Real> a;
  Real& at(int s, int j, int c) {
    return a[(static_cast<size_t>(s) * gamma_t + j) * channels + c];
  }
  const Real& at(int s, int j, int c) const {
    return a[(static_cast<size_t>(s) * gamma_t + j) * channels + c];
  }
};

// (T' x C) -> (T'/gamma_tr, C/gamma_c, gamma_c, gamma_tr):
// seg(a, b, i, j) = h(a*gamma_tr + j, b*gamma_c + i).
struct ChannelSegments {
  int ranges = 0, groups = 0, gamma_c = 0, gamma_tr = 0;
  std::vector<Real> a;
  Real& at(int ai, int b, int i, int j) {
    return a[((static_cast<size_t>(ai) * groups + b) * gamma_c + i) * gamma_tr + j];
  }
  const Real& at(int ai, int b, int i, int j) const {
    return a[((static_cast<size_t>(ai) * groups + b) * gamma_c + i) * gamma_tr + j];
  }
};

TemporalSegments temporal_segmentation(const Mat& h, int gamma_t);
Mat temporal_unsegment(const TemporalSegments& s);
ChannelSegments channel_segmentation(const Mat& h, int gamma_c, int gamma_tr);
Mat channel_unsegment(const ChannelSegments& s);

// Per-level retrieval results on a tape. a_t[l] is stored as a
// (segments x gamma_t) matrix whose rows are the softmax fibers; a_c[l] as
// ((T'/gamma_tr * C/gamma_c) x gamma_c) with row index a*groups + b.
struct RetrievalVars {
  Var z0;
  std::vector<Var> z;
  std::vector<Var> a_t;
  std::vector<Var> a_c;
};

// Plain-matrix view of a retrieval pass plus the logical array shapes used
// for serialization.
struct SpeakerRetrievalOutput {
  Mat z0;
  std::vector<Mat> z;
  std::vector<Mat> a_t;
  std::vector<Mat> a_c;
  std::vector<std::array<int, 3>> a_t_shape;  // (segments, 1, gamma_t)
  std::vector<std::array<int, 4>> a_c_shape;  // (ranges, groups, 1, gamma_c)
};

// Temporal retrieval of one block: conv, segment, attend per segment with
// the speaker-embedding query. Returns (h_c, a_t).
std::pair<Var, Var> temporal_retrieval_t(Ctx& c, Var z_prev, Var xvec,
                                         const std::string& prefix, int gamma_t,
                                         bool uniform_attn);

// Channel retrieval of one block. Returns (z, a_c).
std::pair<Var, Var> channel_retrieval_t(Ctx& c, Var h_c, Var xvec,
                                        const std::string& prefix, int gamma_c,
                                        int gamma_tr, bool uniform_attn);

struct TcrBlockVars {
  Var z, a_t, a_c;
};
TcrBlockVars tcr_block_forward_t(Ctx& c, Var z_prev, Var xvec, int level,
                                 const ModelConfig& cfg);

RetrievalVars mtcr_forward_t(Ctx& c, Var mel, Var xvec, const ModelConfig& cfg);

// Registers every TCR parameter (prenet + blocks) into the store.
void init_tcr_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

// Non-tape wrappers used by tests, inspection, and metrics.
SpeakerRetrievalOutput mtcr_forward(ParamStore& ps, const Mat& mel, const Mat& xvec,
                                    const ModelConfig& cfg);
std::pair<Mat, Mat> temporal_retrieval(ParamStore& ps, const Mat& z_prev, const Mat& xvec,
                                       int level, int gamma_t, bool uniform_attn = false);
std::pair<Mat, Mat> channel_retrieval(ParamStore& ps, const Mat& h_c, const Mat& xvec,
                                      int level, int gamma_c, int gamma_tr,
                                      bool uniform_attn = false);
SpeakerRetrievalOutput extract_retrieval(Tape& t, const RetrievalVars& r);

}  // namespace mtcr
