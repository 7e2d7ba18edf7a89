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

// Compares the serial reference kernels against the OpenMP variants and
// reports throughput plus the observed max deviation (expected: 0).

#include <chrono>
#include <cstdio>
#include <functional>

#include "mtcr/kernels.hpp"
#include "mtcr/rng.hpp"

using namespace mtcr;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void bench_matmul(int m, int k, int n, int reps) {
  Rng rng(42);
  Mat a = random_mat(m, k, rng);
  Mat b = random_mat(k, n, rng);
  Mat out_serial, out_par;
  const double serial = time_ms([&] { kernels::matmul_serial(a, false, b, false, out_serial); }, reps);
  const double par = time_ms([&] { kernels::matmul(a, false, b, false, out_par); }, reps);
  const double gflop = 2.0 * m * k * n / 1e9;
  std::printf("matmul %4dx%4dx%4d  serial %8.2f ms (%5.2f GF/s)  omp %8.2f ms (%5.2f GF/s)  "
              "speedup %.2fx  maxdiff %g\n",
              m, k, n, serial, gflop / serial * 1e3, par, gflop / par * 1e3, serial / par,
              (double)max_abs_diff(out_serial, out_par));
}

void bench_softmax(int rows, int cols, int reps) {
  Rng rng(43);
  Mat base = random_mat(rows, cols, rng);
  Mat s = base, p = base;
  const double serial = time_ms(
      [&] {
        s = base;
        kernels::softmax_rows_serial(s);
      },
      reps);
  const double par = time_ms(
      [&] {
        p = base;
        kernels::softmax_rows(p);
      },
      reps);
  std::printf("softmax %5dx%4d      serial %8.2f ms             omp %8.2f ms             "
              "speedup %.2fx  maxdiff %g\n",
              rows, cols, serial, par, serial / par, (double)max_abs_diff(s, p));
}

void bench_sws(int segments, int group, int cols, int reps) {
  Rng rng(44);
  Mat w = random_mat(segments, group, rng);
  Mat v = random_mat(segments * group, cols, rng);
  Mat out_s, out_p;
  const double serial = time_ms([&] { kernels::seg_weighted_sum_serial(w, v, out_s); }, reps);
  const double par = time_ms([&] { kernels::seg_weighted_sum(w, v, out_p); }, reps);
  std::printf("segwsum %5dx%2dx%4d  serial %8.2f ms             omp %8.2f ms             "
              "speedup %.2fx  maxdiff %g\n",
              segments, group, cols, serial, par, serial / par,
              (double)max_abs_diff(out_s, out_p));
}

}  // namespace

int main() {
  kernels::set_parallel(true);
  bench_matmul(256, 256, 256, 20);
  bench_matmul(512, 512, 512, 5);
  bench_matmul(1024, 256, 1024, 3);
  bench_softmax(4096, 256, 20);
  bench_softmax(512, 4096, 20);
  bench_sws(4096, 16, 256, 20);
  return 0;
}
