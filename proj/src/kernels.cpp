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

#include "mtcr/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "mtcr/errors.hpp"

namespace mtcr::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Below this many multiply-adds the fork/join overhead dominates.
constexpr long kParallelFlops = 1 << 15;

void check_matmul_shapes(const Mat& A, bool ta, const Mat& B, bool tb, int& m, int& k, int& n) {
  if (ta && tb) throw DimensionMismatch("matmul: ta && tb unsupported");
  m = ta ? A.cols : A.rows;
  k = ta ? A.rows : A.cols;
  const int kb = tb ? B.cols : B.rows;
  n = tb ? B.rows : B.cols;
  if (k != kb) throw DimensionMismatch("matmul: inner dimensions disagree");
}

// One output row of C = A*B (no transposes).
inline void row_nn(const Mat& A, const Mat& B, Mat& out, int i) {
  const Real* arow = A.row(i);
  Real* orow = out.row(i);
  for (int k = 0; k < A.cols; ++k) {
    const Real a = arow[k];
    const Real* brow = B.row(k);
    for (int j = 0; j < B.cols; ++j) orow[j] += a * brow[j];
  }
}

// One output row of C = A*B^T.
inline void row_nt(const Mat& A, const Mat& B, Mat& out, int i) {
  const Real* arow = A.row(i);
  Real* orow = out.row(i);
  for (int j = 0; j < B.rows; ++j) {
    const Real* brow = B.row(j);
    Real acc = 0;
    for (int k = 0; k < A.cols; ++k) acc += arow[k] * brow[k];
    orow[j] += acc;
  }
}

// One output row of C = A^T*B; row i of C is column i of A against B.
inline void row_tn(const Mat& A, const Mat& B, Mat& out, int i) {
  Real* orow = out.row(i);
  for (int k = 0; k < A.rows; ++k) {
    const Real a = A(k, i);
    const Real* brow = B.row(k);
    for (int j = 0; j < B.cols; ++j) orow[j] += a * brow[j];
  }
}

void matmul_impl(const Mat& A, bool ta, const Mat& B, bool tb, Mat& out, bool accumulate,
                 bool parallel) {
  int m, k, n;
  check_matmul_shapes(A, ta, B, tb, m, k, n);
  if (accumulate) {
    if (out.rows != m || out.cols != n) throw DimensionMismatch("matmul: accumulate shape");
  } else {
    out = Mat(m, n);
  }
  const long flops = static_cast<long>(m) * k * n;
  const bool par = parallel && flops > kParallelFlops;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (int i = 0; i < m; ++i) {
    if (!ta && !tb)
      row_nn(A, B, out, i);
    else if (!ta && tb)
      row_nt(A, B, out, i);
    else
      row_tn(A, B, out, i);
  }
  (void)par;
}

inline void softmax_row(Real* p, int n) {
  Real mx = p[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, p[j]);
  Real sum = 0;
  for (int j = 0; j < n; ++j) {
    p[j] = std::exp(p[j] - mx);
    sum += p[j];
  }
  const Real inv = Real(1) / sum;
  for (int j = 0; j < n; ++j) p[j] *= inv;
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(); }
void set_parallel(bool on) { g_parallel.store(on); }

void matmul(const Mat& A, bool ta, const Mat& B, bool tb, Mat& out, bool accumulate) {
  matmul_impl(A, ta, B, tb, out, accumulate, g_parallel.load());
}

void matmul_serial(const Mat& A, bool ta, const Mat& B, bool tb, Mat& out, bool accumulate) {
  matmul_impl(A, ta, B, tb, out, accumulate, false);
}

void softmax_rows(Mat& x) {
  if (x.cols < 1) throw DimensionMismatch("softmax_rows: empty rows");
  const bool par = g_parallel.load() && static_cast<long>(x.rows) * x.cols > kParallelFlops;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (int i = 0; i < x.rows; ++i) softmax_row(x.row(i), x.cols);
  (void)par;
}

void softmax_rows_serial(Mat& x) {
  if (x.cols < 1) throw DimensionMismatch("softmax_rows: empty rows");
  for (int i = 0; i < x.rows; ++i) softmax_row(x.row(i), x.cols);
}

void tanh_map(const Mat& x, Mat& out) {
  out = Mat(x.rows, x.cols);
  const long n = static_cast<long>(x.size());
  const bool par = g_parallel.load() && n > kParallelFlops;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (long i = 0; i < n; ++i) out.a[i] = std::tanh(x.a[i]);
  (void)par;
}

void tanh_map_serial(const Mat& x, Mat& out) {
  out = Mat(x.rows, x.cols);
  for (size_t i = 0; i < x.size(); ++i) out.a[i] = std::tanh(x.a[i]);
}

namespace {
inline void sws_row(const Mat& w, const Mat& v, Mat& out, int s) {
  const int g = w.cols;
  Real* orow = out.row(s);
  for (int j = 0; j < g; ++j) {
    const Real wj = w(s, j);
    const Real* vrow = v.row(s * g + j);
    for (int c = 0; c < v.cols; ++c) orow[c] += wj * vrow[c];
  }
}
}  // namespace

void seg_weighted_sum(const Mat& w, const Mat& v, Mat& out) {
  if (v.rows != w.rows * w.cols) throw DimensionMismatch("seg_weighted_sum: v.rows != w.rows*w.cols");
  out = Mat(w.rows, v.cols);
  const bool par = g_parallel.load() && static_cast<long>(v.rows) * v.cols > kParallelFlops;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (int s = 0; s < w.rows; ++s) sws_row(w, v, out, s);
  (void)par;
}

void seg_weighted_sum_serial(const Mat& w, const Mat& v, Mat& out) {
  if (v.rows != w.rows * w.cols) throw DimensionMismatch("seg_weighted_sum: v.rows != w.rows*w.cols");
  out = Mat(w.rows, v.cols);
  for (int s = 0; s < w.rows; ++s) sws_row(w, v, out, s);
}

}  // namespace mtcr::kernels
