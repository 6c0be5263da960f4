// Copyright (c) 2026 The srlkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Times the OpenMP kernels against their serial reference implementations
// and reports the max elementwise deviation for each pair.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "srl/kernels.hpp"
#include "srl/rng.hpp"

using namespace srl;
using Clock = std::chrono::steady_clock;

namespace {

Mat random_mat(int r, int c, uint64_t seed) {
  Mat m(r, c);
  Rng rng(seed);
  for (double& v : m.d) v = rng.gaussian();
  return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void bench_matmul(int n, int reps) {
  Mat a = random_mat(n, n, 1);
  Mat b = random_mat(n, n, 2);
  Mat c_omp, c_ref;
  for (auto [ta, tb, name] : {std::tuple{false, false, "NN"},
                              std::tuple{false, true, "NT"},
                              std::tuple{true, false, "TN"}}) {
    double ms_omp =
        time_ms([&] { kernels::matmul(a, ta, b, tb, c_omp, false); }, reps);
    double ms_ref =
        time_ms([&] { kernels::ref::matmul(a, ta, b, tb, c_ref, false); }, reps);
    std::printf("matmul_%s  %4dx%-4d  omp %8.3f ms  serial %8.3f ms  speedup %5.2fx  maxdiff %.3g\n",
                name, n, n, ms_omp, ms_ref, ms_ref / ms_omp,
                max_abs_diff(c_omp, c_ref));
  }
}

void bench_softmax(int rows, int cols, int reps) {
  Mat x = random_mat(rows, cols, 3);
  Mat yo, yr;
  double ms_omp = time_ms([&] { yo = kernels::softmax_rows(x); }, reps);
  double ms_ref = time_ms([&] { yr = kernels::ref::softmax_rows(x); }, reps);
  std::printf("softmax    %4dx%-4d  omp %8.3f ms  serial %8.3f ms  speedup %5.2fx  maxdiff %.3g\n",
              rows, cols, ms_omp, ms_ref, ms_ref / ms_omp, max_abs_diff(yo, yr));
}

void bench_im2col(int t, int c, int reps) {
  Mat x = random_mat(t, c, 4);
  Mat yo, yr;
  double ms_omp = time_ms([&] { yo = kernels::im2col(x, 3, 2); }, reps);
  double ms_ref = time_ms([&] { yr = kernels::ref::im2col(x, 3, 2); }, reps);
  std::printf("im2col     %4dx%-4d  omp %8.3f ms  serial %8.3f ms  speedup %5.2fx  maxdiff %.3g\n",
              t, c, ms_omp, ms_ref, ms_ref / ms_omp, max_abs_diff(yo, yr));
}

}  // namespace

int main(int argc, char** argv) {
  int size = argc > 1 ? std::atoi(argv[1]) : 256;
  int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  std::printf("kernel benchmark, size %d, %d reps per timing\n", size, reps);
  bench_matmul(size, reps);
  bench_softmax(size * 4, size, reps);
  bench_im2col(size * 16, size / 2, reps);
  return 0;
}
