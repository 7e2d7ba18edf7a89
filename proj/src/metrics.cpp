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

#include "mtcr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "mtcr/errors.hpp"

namespace mtcr {

Real cosine(const Mat& a, const Mat& b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine: size mismatch");
  Real dot = 0, na = 0, nb = 0;
  bool identical = true;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a.a[i] * b.a[i];
    na += a.a[i] * a.a[i];
    nb += b.a[i] * b.a[i];
    identical = identical && a.a[i] == b.a[i];
  }
  if (na == 0 || nb == 0) throw DegenerateInput("cosine: zero vector");
  if (identical) return 1;  // exact where rounding would land a hair below
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Real pearson_lf0(const Mat& src_pitch, const Mat& conv_pitch) {
  if (src_pitch.size() != conv_pitch.size())
    throw DimensionMismatch("pearson_lf0: length mismatch");
  std::vector<Real> x, y;
  for (size_t i = 0; i < src_pitch.size(); ++i)
    if (src_pitch.a[i] != 0 && conv_pitch.a[i] != 0) {
      x.push_back(src_pitch.a[i]);
      y.push_back(conv_pitch.a[i]);
    }
  if (x.size() < 2) throw DegenerateInput("pearson_lf0: fewer than 2 voiced frames");
  const Real n = static_cast<Real>(x.size());
  Real mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  Real sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0)
    throw DegenerateInput("pearson_lf0: constant sequence on the voiced support");
  return sxy / std::sqrt(sxx * syy);
}

EerResult eer_threshold(const std::vector<std::pair<Real, bool>>& scores) {
  size_t n_pos = 0, n_neg = 0;
  for (const auto& [s, same] : scores) (same ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0)
    throw OneClassOnly("eer_threshold: both trial classes must be present");

  // Candidate thresholds: below the minimum, between distinct scores,
  // above the maximum.
  std::vector<Real> values;
  values.reserve(scores.size());
  for (const auto& [s, same] : scores) values.push_back(s);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<Real> cands;
  cands.push_back(values.front() - 1);
  for (size_t i = 0; i + 1 < values.size(); ++i)
    cands.push_back((values[i] + values[i + 1]) / 2);
  cands.push_back(values.back() + 1);

  auto rates = [&](Real thr) {
    size_t fa = 0, fr = 0;
    for (const auto& [s, same] : scores) {
      if (same && s < thr) ++fr;
      if (!same && s >= thr) ++fa;
    }
    return std::pair<Real, Real>{static_cast<Real>(fa) / n_neg, static_cast<Real>(fr) / n_pos};
  };

  // FAR decreases and FRR increases with the threshold; find the sign
  // change of (FAR - FRR) and interpolate between the two operating points.
  Real prev_thr = cands.front();
  auto [prev_far, prev_frr] = rates(prev_thr);
  for (size_t i = 1; i < cands.size(); ++i) {
    auto [far, frr] = rates(cands[i]);
    const Real prev_diff = prev_far - prev_frr;
    const Real diff = far - frr;
    if (diff <= 0) {
      const Real denom = prev_diff - diff;
      const Real alpha = denom > 0 ? prev_diff / denom : Real(0.5);
      EerResult r;
      r.threshold = prev_thr + alpha * (cands[i] - prev_thr);
      const Real eer_far = prev_far + alpha * (far - prev_far);
      const Real eer_frr = prev_frr + alpha * (frr - prev_frr);
      r.eer = (eer_far + eer_frr) / 2;
      return r;
    }
    prev_thr = cands[i];
    prev_far = far;
    prev_frr = frr;
  }
  // FAR stayed above FRR everywhere; accept-nothing is the crossing.
  return {cands.back(), prev_far / 2 + prev_frr / 2};
}

Real speaker_accuracy(const std::vector<Mat>& converted_mels,
                      const std::vector<Mat>& target_mels, const FrozenModels& sv_stub,
                      Real threshold) {
  if (converted_mels.empty()) throw EmptySet("speaker_accuracy: no trials");
  if (converted_mels.size() != target_mels.size())
    throw DimensionMismatch("speaker_accuracy: trial list sizes differ");
  size_t hits = 0;
  for (size_t i = 0; i < converted_mels.size(); ++i) {
    const Mat ec = sv_stub.sv_embed(converted_mels[i]);
    const Mat et = sv_stub.sv_embed(target_mels[i]);
    if (cosine(ec, et) >= threshold) ++hits;
  }
  return static_cast<Real>(hits) / static_cast<Real>(converted_mels.size());
}

}  // namespace mtcr
