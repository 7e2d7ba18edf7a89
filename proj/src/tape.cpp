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

#include "mtcr/tape.hpp"

#include <cmath>

#include "mtcr/kernels.hpp"

namespace mtcr {

namespace {
void require(bool ok, const char* msg) {
  if (!ok) throw DimensionMismatch(msg);
}
}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::leaf(Mat v, bool needs_grad) {
  Node n;
  n.op = Op::Leaf;
  n.val = std::move(v);
  n.needs_grad = needs_grad;
  return Var{this, push(std::move(n))};
}

Var Tape::add(Var a, Var b) {
  require(val(a).same_shape(val(b)), "add: shape mismatch");
  Node n;
  n.op = Op::Add;
  n.x = a.id;
  n.y = b.id;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  n.val = val(a);
  for (size_t i = 0; i < n.val.size(); ++i) n.val.a[i] += val(b).a[i];
  return Var{this, push(std::move(n))};
}

Var Tape::sub(Var a, Var b) {
  require(val(a).same_shape(val(b)), "sub: shape mismatch");
  Node n;
  n.op = Op::Sub;
  n.x = a.id;
  n.y = b.id;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  n.val = val(a);
  for (size_t i = 0; i < n.val.size(); ++i) n.val.a[i] -= val(b).a[i];
  return Var{this, push(std::move(n))};
}

Var Tape::mul(Var a, Var b) {
  require(val(a).same_shape(val(b)), "mul: shape mismatch");
  Node n;
  n.op = Op::Mul;
  n.x = a.id;
  n.y = b.id;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  n.val = val(a);
  for (size_t i = 0; i < n.val.size(); ++i) n.val.a[i] *= val(b).a[i];
  return Var{this, push(std::move(n))};
}

Var Tape::scale(Var a, Real c) {
  Node n;
  n.op = Op::Scale;
  n.x = a.id;
  n.c = c;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val = val(a);
  for (auto& v : n.val.a) v *= c;
  return Var{this, push(std::move(n))};
}

Var Tape::add_row(Var a, Var rowvec) {
  const Mat& r = val(rowvec);
  require(r.rows == 1 && r.cols == val(a).cols, "add_row: rowvec must be 1 x cols");
  Node n;
  n.op = Op::AddRow;
  n.x = a.id;
  n.y = rowvec.id;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[rowvec.id].needs_grad;
  n.val = val(a);
  for (int i = 0; i < n.val.rows; ++i) {
    Real* row = n.val.row(i);
    for (int j = 0; j < n.val.cols; ++j) row[j] += r.a[j];
  }
  return Var{this, push(std::move(n))};
}

Var Tape::matmul(Var a, Var b, bool ta, bool tb) {
  Node n;
  n.op = Op::MatMul;
  n.x = a.id;
  n.y = b.id;
  n.ta = ta;
  n.tb = tb;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  kernels::matmul(val(a), ta, val(b), tb, n.val);
  return Var{this, push(std::move(n))};
}

Var Tape::tanh_(Var a) {
  Node n;
  n.op = Op::Tanh;
  n.x = a.id;
  n.needs_grad = nodes_[a.id].needs_grad;
  kernels::tanh_map(val(a), n.val);
  return Var{this, push(std::move(n))};
}

Var Tape::softmax_rows(Var a) {
  Node n;
  n.op = Op::SoftmaxRows;
  n.x = a.id;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val = val(a);
  kernels::softmax_rows(n.val);
  return Var{this, push(std::move(n))};
}

Var Tape::gather(Var a, IndexPtr idx, int out_rows, int out_cols) {
  const Mat& in = val(a);
  require(static_cast<size_t>(out_rows) * out_cols == idx->size(), "gather: idx size");
  Node n;
  n.op = Op::Gather;
  n.x = a.id;
  n.idx = std::move(idx);
  n.in_rows = in.rows;
  n.in_cols = in.cols;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val = Mat(out_rows, out_cols);
  const auto& ix = *n.idx;
  for (size_t i = 0; i < ix.size(); ++i) n.val.a[i] = in.a[ix[i]];
  return Var{this, push(std::move(n))};
}

Var Tape::reshape(Var a, int r, int c) {
  const Mat& in = val(a);
  require(static_cast<size_t>(r) * c == in.size(), "reshape: element count");
  Node n;
  n.op = Op::Reshape;
  n.x = a.id;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val = in;
  n.val.rows = r;
  n.val.cols = c;
  return Var{this, push(std::move(n))};
}

Var Tape::slice_rows(Var a, int r0, int nrows) {
  const Mat& in = val(a);
  require(r0 >= 0 && nrows >= 1 && r0 + nrows <= in.rows, "slice_rows: range");
  Node n;
  n.op = Op::SliceRows;
  n.x = a.id;
  n.i0 = r0;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val = Mat(nrows, in.cols);
  for (int i = 0; i < nrows; ++i)
    for (int j = 0; j < in.cols; ++j) n.val(i, j) = in(r0 + i, j);
  return Var{this, push(std::move(n))};
}

Var Tape::mean_rows(Var a) {
  const Mat& in = val(a);
  require(in.rows >= 1, "mean_rows: empty");
  Node n;
  n.op = Op::MeanRows;
  n.x = a.id;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val = Mat(1, in.cols);
  for (int i = 0; i < in.rows; ++i)
    for (int j = 0; j < in.cols; ++j) n.val.a[j] += in(i, j);
  const Real inv = Real(1) / in.rows;
  for (auto& v : n.val.a) v *= inv;
  return Var{this, push(std::move(n))};
}

Var Tape::mean_all(Var a) {
  const Mat& in = val(a);
  require(in.size() >= 1, "mean_all: empty");
  Node n;
  n.op = Op::MeanAll;
  n.x = a.id;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val = Mat(1, 1);
  Real acc = 0;
  for (Real v : in.a) acc += v;
  n.val.a[0] = acc / static_cast<Real>(in.size());
  return Var{this, push(std::move(n))};
}

Var Tape::seg_weighted_sum(Var w, Var v) {
  Node n;
  n.op = Op::SegWSum;
  n.x = w.id;
  n.y = v.id;
  n.needs_grad = nodes_[w.id].needs_grad || nodes_[v.id].needs_grad;
  kernels::seg_weighted_sum(val(w), val(v), n.val);
  return Var{this, push(std::move(n))};
}

Var Tape::avg_pool_rows(Var a, int factor) {
  const Mat& in = val(a);
  require(factor >= 1, "avg_pool_rows: factor");
  if (in.rows % factor != 0) throw DivisibilityError("avg_pool_rows: factor does not divide rows");
  Node n;
  n.op = Op::AvgPool;
  n.x = a.id;
  n.i0 = factor;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val = Mat(in.rows / factor, in.cols);
  const Real inv = Real(1) / factor;
  for (int p = 0; p < n.val.rows; ++p)
    for (int j = 0; j < factor; ++j) {
      const Real* src = in.row(p * factor + j);
      Real* dst = n.val.row(p);
      for (int c = 0; c < in.cols; ++c) dst[c] += src[c] * inv;
    }
  return Var{this, push(std::move(n))};
}

Var Tape::repeat_rows(Var a, int factor) {
  const Mat& in = val(a);
  require(factor >= 1, "repeat_rows: factor");
  Node n;
  n.op = Op::Repeat;
  n.x = a.id;
  n.i0 = factor;
  n.needs_grad = nodes_[a.id].needs_grad;
  n.val = Mat(in.rows * factor, in.cols);
  for (int i = 0; i < n.val.rows; ++i) {
    const Real* src = in.row(i / factor);
    Real* dst = n.val.row(i);
    for (int c = 0; c < in.cols; ++c) dst[c] = src[c];
  }
  return Var{this, push(std::move(n))};
}

Var Tape::concat_rows(Var a, Var b) {
  const Mat& x = val(a);
  const Mat& y = val(b);
  require(x.cols == y.cols, "concat_rows: column mismatch");
  Node n;
  n.op = Op::ConcatRows;
  n.x = a.id;
  n.y = b.id;
  n.i0 = x.rows;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  n.val = Mat(x.rows + y.rows, x.cols);
  std::copy(x.a.begin(), x.a.end(), n.val.a.begin());
  std::copy(y.a.begin(), y.a.end(), n.val.a.begin() + x.a.size());
  return Var{this, push(std::move(n))};
}

const Mat& Tape::val(Var v) const { return nodes_.at(v.id).val; }

Mat Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad_set) return n.grad;
  return Mat(n.val.rows, n.val.cols);
}

bool Tape::has_grad(Var v) const { return nodes_.at(v.id).grad_set; }

Mat& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (!n.grad_set) {
    n.grad = Mat(n.val.rows, n.val.cols);
    n.grad_set = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  const Node& ln = nodes_.at(loss.id);
  require(ln.val.rows == 1 && ln.val.cols == 1, "backward: loss must be 1x1");
  grad_buf(loss.id).a[0] = 1;
  for (int i = loss.id; i >= 0; --i) {
    if (!nodes_[i].grad_set || !nodes_[i].needs_grad) continue;
    backprop_node(i);
  }
}

void Tape::backprop_node(int i) {
  Node& n = nodes_[i];
  const Mat& g = n.grad;
  auto wants = [&](int id) { return id >= 0 && nodes_[id].needs_grad; };

  switch (n.op) {
    case Op::Leaf:
      break;
    case Op::Add: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (size_t k = 0; k < g.size(); ++k) dx.a[k] += g.a[k];
      }
      if (wants(n.y)) {
        Mat& dy = grad_buf(n.y);
        for (size_t k = 0; k < g.size(); ++k) dy.a[k] += g.a[k];
      }
      break;
    }
    case Op::Sub: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (size_t k = 0; k < g.size(); ++k) dx.a[k] += g.a[k];
      }
      if (wants(n.y)) {
        Mat& dy = grad_buf(n.y);
        for (size_t k = 0; k < g.size(); ++k) dy.a[k] -= g.a[k];
      }
      break;
    }
    case Op::Mul: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        const Mat& b = nodes_[n.y].val;
        for (size_t k = 0; k < g.size(); ++k) dx.a[k] += g.a[k] * b.a[k];
      }
      if (wants(n.y)) {
        Mat& dy = grad_buf(n.y);
        const Mat& a = nodes_[n.x].val;
        for (size_t k = 0; k < g.size(); ++k) dy.a[k] += g.a[k] * a.a[k];
      }
      break;
    }
    case Op::Scale: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (size_t k = 0; k < g.size(); ++k) dx.a[k] += g.a[k] * n.c;
      }
      break;
    }
    case Op::AddRow: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (size_t k = 0; k < g.size(); ++k) dx.a[k] += g.a[k];
      }
      if (wants(n.y)) {
        Mat& dy = grad_buf(n.y);
        for (int r = 0; r < g.rows; ++r) {
          const Real* grow = g.row(r);
          for (int c = 0; c < g.cols; ++c) dy.a[c] += grow[c];
        }
      }
      break;
    }
    case Op::MatMul: {
      const Mat& A = nodes_[n.x].val;
      const Mat& B = nodes_[n.y].val;
      if (!n.ta && !n.tb) {
        if (wants(n.x)) kernels::matmul(g, false, B, true, grad_buf(n.x), true);
        if (wants(n.y)) kernels::matmul(A, true, g, false, grad_buf(n.y), true);
      } else if (!n.ta && n.tb) {  // C = A * B^T
        if (wants(n.x)) kernels::matmul(g, false, B, false, grad_buf(n.x), true);
        if (wants(n.y)) kernels::matmul(g, true, A, false, grad_buf(n.y), true);
      } else {  // C = A^T * B
        if (wants(n.x)) kernels::matmul(B, false, g, true, grad_buf(n.x), true);
        if (wants(n.y)) kernels::matmul(A, false, g, false, grad_buf(n.y), true);
      }
      break;
    }
    case Op::Tanh: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (size_t k = 0; k < g.size(); ++k) dx.a[k] += g.a[k] * (Real(1) - n.val.a[k] * n.val.a[k]);
      }
      break;
    }
    case Op::SoftmaxRows: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (int r = 0; r < g.rows; ++r) {
          const Real* y = n.val.row(r);
          const Real* grow = g.row(r);
          Real dot = 0;
          for (int c = 0; c < g.cols; ++c) dot += grow[c] * y[c];
          Real* dxr = dx.row(r);
          for (int c = 0; c < g.cols; ++c) dxr[c] += y[c] * (grow[c] - dot);
        }
      }
      break;
    }
    case Op::Gather: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        const auto& ix = *n.idx;
        for (size_t k = 0; k < ix.size(); ++k) dx.a[ix[k]] += g.a[k];
      }
      break;
    }
    case Op::Reshape: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (size_t k = 0; k < g.size(); ++k) dx.a[k] += g.a[k];
      }
      break;
    }
    case Op::SliceRows: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (int r = 0; r < g.rows; ++r)
          for (int c = 0; c < g.cols; ++c) dx(n.i0 + r, c) += g(r, c);
      }
      break;
    }
    case Op::MeanRows: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        const Real inv = Real(1) / dx.rows;
        for (int r = 0; r < dx.rows; ++r)
          for (int c = 0; c < dx.cols; ++c) dx(r, c) += g.a[c] * inv;
      }
      break;
    }
    case Op::MeanAll: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        const Real inv = g.a[0] / static_cast<Real>(dx.size());
        for (auto& v : dx.a) v += inv;
      }
      break;
    }
    case Op::SegWSum: {
      const Mat& w = nodes_[n.x].val;
      const Mat& v = nodes_[n.y].val;
      const int grp = w.cols;
      if (wants(n.x)) {
        Mat& dw = grad_buf(n.x);
        for (int s = 0; s < w.rows; ++s) {
          const Real* grow = g.row(s);
          for (int j = 0; j < grp; ++j) {
            const Real* vrow = v.row(s * grp + j);
            Real acc = 0;
            for (int c = 0; c < v.cols; ++c) acc += grow[c] * vrow[c];
            dw(s, j) += acc;
          }
        }
      }
      if (wants(n.y)) {
        Mat& dv = grad_buf(n.y);
        for (int s = 0; s < w.rows; ++s) {
          const Real* grow = g.row(s);
          for (int j = 0; j < grp; ++j) {
            const Real wj = w(s, j);
            Real* dvrow = dv.row(s * grp + j);
            for (int c = 0; c < v.cols; ++c) dvrow[c] += wj * grow[c];
          }
        }
      }
      break;
    }
    case Op::AvgPool: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        const Real inv = Real(1) / n.i0;
        for (int p = 0; p < g.rows; ++p)
          for (int j = 0; j < n.i0; ++j) {
            Real* dst = dx.row(p * n.i0 + j);
            const Real* src = g.row(p);
            for (int c = 0; c < g.cols; ++c) dst[c] += src[c] * inv;
          }
      }
      break;
    }
    case Op::Repeat: {
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (int i2 = 0; i2 < g.rows; ++i2) {
          Real* dst = dx.row(i2 / n.i0);
          const Real* src = g.row(i2);
          for (int c = 0; c < g.cols; ++c) dst[c] += src[c];
        }
      }
      break;
    }
    case Op::ConcatRows: {
      const size_t split = static_cast<size_t>(n.i0) * g.cols;
      if (wants(n.x)) {
        Mat& dx = grad_buf(n.x);
        for (size_t k = 0; k < split; ++k) dx.a[k] += g.a[k];
      }
      if (wants(n.y)) {
        Mat& dy = grad_buf(n.y);
        for (size_t k = split; k < g.size(); ++k) dy.a[k - split] += g.a[k];
      }
      break;
    }
  }
}

}  // namespace mtcr
