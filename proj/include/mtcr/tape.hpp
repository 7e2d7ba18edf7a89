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

#include <memory>
#include <vector>

#include "mtcr/errors.hpp"
#include "mtcr/mat.hpp"

namespace mtcr {

// Reverse-mode tape over matrices. One tape per forward/backward pass;
// node ids are indices into the tape, created in topological order.
class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
  const Mat& val() const;
  int rows() const { return val().rows; }
  int cols() const { return val().cols; }
};

using IndexPtr = std::shared_ptr<const std::vector<int>>;

class Tape {
 public:
  Var leaf(Mat v, bool needs_grad);
  Var leaf(const Mat& v, bool needs_grad, int /*tag*/) = delete;

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                 // Hadamard
  Var scale(Var a, Real c);
  Var add_row(Var a, Var rowvec);        // rowvec is 1 x cols, broadcast over rows
  Var matmul(Var a, Var b, bool ta = false, bool tb = false);
  Var tanh_(Var a);
  Var softmax_rows(Var a);
  // out flat[i] = in flat[idx[i]]; backward scatter-adds. idx entries must
  // be valid flat indices of the input.
  Var gather(Var a, IndexPtr idx, int out_rows, int out_cols);
  Var reshape(Var a, int r, int c);
  Var slice_rows(Var a, int r0, int nrows);
  Var mean_rows(Var a);                  // 1 x cols
  Var mean_all(Var a);                   // 1 x 1
  // out[s,:] = sum_j w(s,j) * v(s*g+j,:), g = w.cols. Differentiable in both.
  Var seg_weighted_sum(Var w, Var v);
  Var avg_pool_rows(Var a, int factor);
  Var repeat_rows(Var a, int factor);
  Var concat_rows(Var a, Var b);

  void backward(Var loss);

  const Mat& val(Var v) const;
  // Zero matrix of the node's shape when no gradient reached it.
  Mat grad(Var v) const;
  bool has_grad(Var v) const;

  size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    Leaf, Add, Sub, Mul, Scale, AddRow, MatMul, Tanh, SoftmaxRows,
    Gather, Reshape, SliceRows, MeanRows, MeanAll, SegWSum, AvgPool, Repeat,
    ConcatRows
  };

  struct Node {
    Op op = Op::Leaf;
    int x = -1, y = -1;
    Mat val;
    Mat grad;
    bool needs_grad = false;
    bool grad_set = false;
    Real c = 0;
    int i0 = 0;          // slice start / pool factor / repeat factor
    bool ta = false, tb = false;
    IndexPtr idx;
    int in_rows = 0, in_cols = 0;
  };

  int push(Node n);
  Mat& grad_buf(int id);
  void backprop_node(int i);

  std::vector<Node> nodes_;
};

inline const Mat& Var::val() const { return tape->val(*this); }

// Convenience operators for readable model code.
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }

}  // namespace mtcr
