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

#include "mtcr/nn.hpp"

#include <cmath>
#include <functional>
#include <mutex>
#include <tuple>

#include "mtcr/errors.hpp"

namespace mtcr {

Mat& ParamStore::create(const std::string& name, int rows, int cols, Rng& rng, int fan_in) {
  if (params.count(name)) throw DuplicateName("parameter already exists: " + name);
  const Real bound = Real(1) / std::sqrt(static_cast<Real>(fan_in));
  Mat m(rows, cols);
  for (auto& v : m.a) v = static_cast<Real>(rng.uniform(-bound, bound));
  return params.emplace(name, std::move(m)).first->second;
}

Mat& ParamStore::create_zero(const std::string& name, int rows, int cols) {
  if (params.count(name)) throw DuplicateName("parameter already exists: " + name);
  return params.emplace(name, Mat(rows, cols)).first->second;
}

Mat& ParamStore::at(const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

const Mat& ParamStore::at(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) throw Error("unknown parameter: " + name);
  return it->second;
}

size_t ParamStore::total_scalars() const {
  size_t n = 0;
  for (const auto& [k, v] : params) n += v.size();
  return n;
}

uint64_t ParamStore::hash() const {
  uint64_t h = 1469598103934665603ull;
  for (const auto& [k, v] : params) {
    h ^= hash_str(k);
    h = hash_mat(v, h);
  }
  return h;
}

Var Ctx::P(const std::string& name) {
  auto it = bound.find(name);
  if (it != bound.end()) return Var{&t, it->second};
  Var v = t.leaf(ps.at(name), true);
  bound.emplace(name, v.id);
  return v;
}

Var affine(Ctx& c, const std::string& prefix, Var x) {
  Var w = c.P(prefix + ".w");
  Var b = c.P(prefix + ".b");
  if (x.cols() != w.rows()) throw DimensionMismatch("affine " + prefix + ": input width");
  return c.t.add_row(c.t.matmul(x, w), b);
}

// ---- index builders -------------------------------------------------------

namespace {

struct IndexKey {
  int kind, a, b, cpar, d;
  bool operator<(const IndexKey& o) const {
    return std::tie(kind, a, b, cpar, d) < std::tie(o.kind, o.a, o.b, o.cpar, o.d);
  }
};

std::map<IndexKey, IndexPtr>& index_cache() {
  static std::map<IndexKey, IndexPtr> cache;
  return cache;
}
std::mutex& index_mutex() {
  static std::mutex m;
  return m;
}

IndexPtr cached(IndexKey key, const std::function<std::vector<int>()>& build) {
  std::lock_guard<std::mutex> lock(index_mutex());
  auto& cache = index_cache();
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto p = std::make_shared<const std::vector<int>>(build());
  cache.emplace(key, p);
  return p;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

IndexPtr plane3x3_index(int rows, int cols) {
  return cached({1, rows, cols, 0, 0}, [=] {
    std::vector<int> idx;
    idx.reserve(static_cast<size_t>(rows) * cols * 9);
    for (int t = 0; t < rows; ++t)
      for (int ch = 0; ch < cols; ++ch)
        for (int dt = -1; dt <= 1; ++dt)
          for (int dc = -1; dc <= 1; ++dc) {
            const int tt = clampi(t + dt, 0, rows - 1);
            const int cc = clampi(ch + dc, 0, cols - 1);
            idx.push_back(tt * cols + cc);
          }
    return idx;
  });
}

int conv1d_out_len(int t_in, int stride) { return (t_in + stride - 1) / stride; }

IndexPtr conv1d_index(int t_in, int channels, int k, int stride) {
  return cached({2, t_in, channels, k, stride}, [=] {
    const int t_out = conv1d_out_len(t_in, stride);
    const int half = (k - 1) / 2;
    std::vector<int> idx;
    idx.reserve(static_cast<size_t>(t_out) * k * channels);
    for (int to = 0; to < t_out; ++to)
      for (int dk = 0; dk < k; ++dk) {
        const int ti = clampi(to * stride + dk - half, 0, t_in - 1);
        for (int ch = 0; ch < channels; ++ch) idx.push_back(ti * channels + ch);
      }
    return idx;
  });
}

IndexPtr channel_seg_index(int t_prime, int channels, int gamma_c, int gamma_tr) {
  return cached({3, t_prime, channels, gamma_c, gamma_tr}, [=] {
    const int a_count = t_prime / gamma_tr;
    const int b_count = channels / gamma_c;
    std::vector<int> idx;
    idx.reserve(static_cast<size_t>(t_prime) * channels);
    for (int a = 0; a < a_count; ++a)
      for (int b = 0; b < b_count; ++b)
        for (int i = 0; i < gamma_c; ++i)
          for (int j = 0; j < gamma_tr; ++j)
            idx.push_back((a * gamma_tr + j) * channels + (b * gamma_c + i));
    return idx;
  });
}

IndexPtr strips_to_time_index(int t_prime, int b_count, int gamma_tr) {
  return cached({4, t_prime, b_count, gamma_tr, 0}, [=] {
    const int a_count = t_prime / gamma_tr;
    std::vector<int> idx(static_cast<size_t>(t_prime) * b_count);
    for (int a = 0; a < a_count; ++a)
      for (int j = 0; j < gamma_tr; ++j)
        for (int b = 0; b < b_count; ++b)
          idx[static_cast<size_t>(a * gamma_tr + j) * b_count + b] =
              (a * b_count + b) * gamma_tr + j;
    return idx;
  });
}

IndexPtr pad_rows_index(int t_real, int t_out, int cols) {
  return cached({5, t_real, t_out, cols, 0}, [=] {
    std::vector<int> idx(static_cast<size_t>(t_out) * cols);
    for (int t = 0; t < t_out; ++t) {
      const int src = t < t_real ? t : t_real - 1;
      for (int ch = 0; ch < cols; ++ch)
        idx[static_cast<size_t>(t) * cols + ch] = src * cols + ch;
    }
    return idx;
  });
}

// ---- layers ---------------------------------------------------------------

Var conv_plane3x3_with(Ctx& c, Var kernel, Var bias, Var x) {
  const int rows = x.rows(), cols = x.cols();
  Var patches = c.t.gather(x, plane3x3_index(rows, cols), rows * cols, 9);
  Var y = c.t.add_row(c.t.matmul(patches, kernel), bias);
  return c.t.reshape(y, rows, cols);
}

Var conv_plane3x3(Ctx& c, const std::string& prefix, Var x) {
  return conv_plane3x3_with(c, c.P(prefix + ".k"), c.P(prefix + ".b"), x);
}

Var conv1d(Ctx& c, const std::string& prefix, Var x, int k, int stride) {
  Var w = c.P(prefix + ".w");
  Var b = c.P(prefix + ".b");
  const int t_in = x.rows(), ch = x.cols();
  if (w.rows() != k * ch) throw DimensionMismatch("conv1d " + prefix + ": weight rows");
  const int t_out = conv1d_out_len(t_in, stride);
  Var patches = c.t.gather(x, conv1d_index(t_in, ch, k, stride), t_out, k * ch);
  return c.t.add_row(c.t.matmul(patches, w), b);
}

Var attend_rows(Tape& t, Var q, Var k, Var v, Real scale) {
  Var logits = t.scale(t.matmul(q, k, false, true), Real(1) / scale);
  Var w = t.softmax_rows(logits);
  return t.matmul(w, v);
}

Var self_attention(Ctx& c, const std::string& prefix, Var x) {
  Var q = affine(c, prefix + ".q", x);
  Var k = affine(c, prefix + ".k", x);
  Var v = affine(c, prefix + ".v", x);
  const Real scale = std::sqrt(static_cast<Real>(q.cols()));
  Var ctx = attend_rows(c.t, q, k, v, scale);
  return affine(c, prefix + ".o", ctx);
}

}  // namespace mtcr
