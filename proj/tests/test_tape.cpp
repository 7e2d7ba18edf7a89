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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "mtcr/nn.hpp"
#include "mtcr/rng.hpp"
#include "mtcr/tape.hpp"

using namespace mtcr;

namespace {

// Central-difference check of d(scalar graph)/d(leaf) for a graph builder.
// The builder must reduce to a 1x1 node.
void check_gradient(const Mat& x0, const std::function<Var(Tape&, Var)>& build,
                    Real tol = 1e-6) {
  Tape t;
  Var x = t.leaf(x0, true);
  Var loss = build(t, x);
  t.backward(loss);
  Mat analytic = t.grad(x);

  const Real eps = 1e-6;
  Mat xp = x0;
  for (size_t i = 0; i < x0.size(); ++i) {
    xp.a[i] = x0.a[i] + eps;
    Tape tp;
    Real lp = tp.val(build(tp, tp.leaf(xp, false)))(0, 0);
    xp.a[i] = x0.a[i] - eps;
    Tape tm;
    Real lm = tm.val(build(tm, tm.leaf(xp, false)))(0, 0);
    xp.a[i] = x0.a[i];
    const Real numeric = (lp - lm) / (2 * eps);
    CHECK(analytic.a[i] == doctest::Approx(numeric).epsilon(tol).scale(1.0));
  }
}

Mat rand_mat(int r, int c, uint64_t seed, Real scale = 1.0) {
  Rng rng(seed);
  return random_mat(r, c, rng, scale);
}

}  // namespace

TEST_CASE("matmul forward and gradient") {
  Mat a0 = rand_mat(3, 4, 10);
  Mat b0 = rand_mat(4, 2, 11);
  check_gradient(a0, [&](Tape& t, Var x) {
    Var b = t.leaf(b0, false);
    Var y = t.matmul(x, b);
    return t.mean_all(t.mul(y, y));
  });
  // matmul with transposed second operand
  Mat c0 = rand_mat(2, 4, 12);
  check_gradient(c0, [&](Tape& t, Var x) {
    Var a = t.leaf(a0, false);
    Var y = t.matmul(a, x, false, true);
    return t.mean_all(t.mul(y, y));
  });
}

TEST_CASE("softmax rows gradient") {
  Mat x0 = rand_mat(4, 5, 20, 2.0);
  Mat r0 = rand_mat(4, 5, 21);
  check_gradient(x0, [&](Tape& t, Var x) {
    Var y = t.softmax_rows(x);
    return t.mean_all(t.mul(y, t.leaf(r0, false)));
  });
}

TEST_CASE("tanh, scale, add_row, slice, reshape gradients") {
  Mat x0 = rand_mat(6, 3, 30);
  Mat row0 = rand_mat(1, 3, 31);
  check_gradient(x0, [&](Tape& t, Var x) {
    Var y = t.tanh_(t.scale(x, 0.7));
    y = t.add_row(y, t.leaf(row0, false));
    y = t.slice_rows(y, 1, 4);
    y = t.reshape(y, 2, 6);
    return t.mean_all(t.mul(y, y));
  });
  // gradient w.r.t. the broadcast row
  check_gradient(row0, [&](Tape& t, Var r) {
    Var y = t.add_row(t.leaf(x0, false), r);
    return t.mean_all(t.mul(y, y));
  });
}

TEST_CASE("gather scatters gradients, including replication") {
  Mat x0 = rand_mat(3, 2, 40);
  auto idx = std::make_shared<const std::vector<int>>(std::vector<int>{0, 1, 4, 5, 4, 5});
  check_gradient(x0, [&](Tape& t, Var x) {
    Var y = t.gather(x, idx, 3, 2);
    return t.mean_all(t.mul(y, y));
  });
}

TEST_CASE("segment weighted sum gradients in both arguments") {
  Mat w0 = rand_mat(3, 4, 50);
  Mat v0 = rand_mat(12, 5, 51);
  check_gradient(w0, [&](Tape& t, Var w) {
    Var y = t.seg_weighted_sum(w, t.leaf(v0, false));
    return t.mean_all(t.mul(y, y));
  });
  check_gradient(v0, [&](Tape& t, Var v) {
    Var y = t.seg_weighted_sum(t.leaf(w0, false), v);
    return t.mean_all(t.mul(y, y));
  });
}

TEST_CASE("value-path gradient equals the frozen attention weight") {
  // With weights held constant, d out[s,c] / d v[s*g+j,c] = w(s,j) exactly.
  Mat w0(2, 3, {0.2, 0.3, 0.5, 0.1, 0.8, 0.1});
  Mat v0 = rand_mat(6, 2, 52);
  Tape t;
  Var v = t.leaf(v0, true);
  Var out = t.seg_weighted_sum(t.leaf(w0, false), v);
  // loss = out(1, 0)
  Var loss = t.mean_all(t.slice_rows(t.reshape(out, 4, 1), 2, 1));
  t.backward(loss);
  Mat g = t.grad(v);
  CHECK(g(3, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(g(4, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(g(5, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(g(0, 0) == 0.0);
  CHECK(g(3, 1) == 0.0);
}

TEST_CASE("pooling, repeat, mean and concat gradients") {
  Mat x0 = rand_mat(8, 3, 60);
  check_gradient(x0, [&](Tape& t, Var x) {
    Var y = t.avg_pool_rows(x, 4);
    y = t.repeat_rows(y, 2);
    return t.mean_all(t.mul(y, y));
  });
  check_gradient(x0, [&](Tape& t, Var x) {
    Var y = t.mean_rows(x);
    return t.mean_all(t.mul(y, y));
  });
  Mat y0 = rand_mat(2, 3, 61);
  check_gradient(x0, [&](Tape& t, Var x) {
    Var y = t.concat_rows(x, t.leaf(y0, false));
    return t.mean_all(t.mul(y, y));
  });
  check_gradient(y0, [&](Tape& t, Var y) {
    Var z = t.concat_rows(t.leaf(x0, false), y);
    return t.mean_all(t.mul(z, z));
  });
}

TEST_CASE("shared subexpression accumulates gradients from all uses") {
  Mat x0 = rand_mat(2, 2, 70);
  check_gradient(x0, [&](Tape& t, Var x) {
    Var y = t.add(x, x);          // 2x
    Var z = t.mul(y, x);          // 2x^2
    return t.mean_all(z);
  });
}

TEST_CASE("shape violations throw") {
  Tape t;
  Var a = t.leaf(Mat(2, 3), false);
  Var b = t.leaf(Mat(3, 2), false);
  CHECK_THROWS_AS((void)t.add(a, b), DimensionMismatch);
  CHECK_THROWS_AS((void)t.matmul(a, a), DimensionMismatch);
  CHECK_THROWS_AS((void)t.avg_pool_rows(a, 4), DivisibilityError);
  CHECK_THROWS_AS((void)t.backward(a), DimensionMismatch);
}

TEST_CASE("conv and attention helpers differentiate") {
  ParamStore ps;
  Rng rng(80);
  ps.create("conv.k", 9, 1, rng, 9);
  ps.create_zero("conv.b", 1, 1);
  ps.create("c1.w", 3 * 2, 4, rng, 6);
  ps.create_zero("c1.b", 1, 4);

  Mat x0 = rand_mat(6, 2, 81);
  check_gradient(x0, [&](Tape& t, Var x) {
    Ctx c{t, ps};
    Var y = conv_plane3x3(c, "conv", x);
    y = conv1d(c, "c1", y, 3, 2);
    return t.mean_all(t.mul(y, y));
  });

  // gradient w.r.t. the conv kernel itself
  Mat k0 = ps.at("conv.k");
  check_gradient(k0, [&](Tape& t, Var kvar) {
    Ctx c{t, ps};
    Var bias = t.leaf(ps.at("conv.b"), false);
    Var y = conv_plane3x3_with(c, kvar, bias, t.leaf(x0, false));
    return t.mean_all(t.mul(y, y));
  });
}
