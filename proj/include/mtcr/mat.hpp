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

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace mtcr {

#ifdef MTCR_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

// Dense row-major matrix. The single value container of the whole project;
// higher-rank arrays are carried as matrices plus documented index layouts.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<Real> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * static_cast<size_t>(c), Real(0)) {}
  Mat(int r, int c, std::initializer_list<Real> v) : rows(r), cols(c), a(v) {
    assert(static_cast<size_t>(r) * c == a.size());
  }

  Real& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const Real& operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  Real* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  const Real* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }

  size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  void fill(Real v) { std::fill(a.begin(), a.end(), v); }
};

inline bool all_finite(const Mat& m) {
  for (Real v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool bitwise_equal(const Mat& x, const Mat& y) {
  if (!x.same_shape(y)) return false;
  for (size_t i = 0; i < x.a.size(); ++i)
    if (x.a[i] != y.a[i] || std::signbit(x.a[i]) != std::signbit(y.a[i])) return false;
  return true;
}

inline Real max_abs_diff(const Mat& x, const Mat& y) {
  assert(x.same_shape(y));
  Real m = 0;
  for (size_t i = 0; i < x.a.size(); ++i) m = std::max(m, std::abs(x.a[i] - y.a[i]));
  return m;
}

// FNV-1a over the raw bytes; used for frozen-parameter constancy checks.
inline uint64_t hash_bytes(const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t hash_mat(const Mat& m, uint64_t h0 = 1469598103934665603ull) {
  uint64_t h = h0;
  h ^= hash_bytes(m.a.data(), m.a.size() * sizeof(Real));
  h *= 1099511628211ull;
  h ^= (static_cast<uint64_t>(m.rows) << 32) ^ static_cast<uint64_t>(m.cols);
  return h;
}

}  // namespace mtcr
