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

#ifndef SRL_KERNELS_HPP_
#define SRL_KERNELS_HPP_

#include "srl/common.hpp"

namespace srl {
namespace kernels {

// OpenMP-parallel compute kernels. Parallelism is always over independent
// output rows with a fixed inner accumulation order, so results are
// bitwise identical for any thread count. A naive serial implementation of
// each kernel lives in kernels::ref and is compared against these in tests
// and in tools/bench_kernels.

// C = op(A) * op(B), op = transpose when ta/tb. accumulate adds into C.
void matmul(const Mat& a, bool ta, const Mat& b, bool tb, Mat& c,
            bool accumulate = false);

Mat matmul(const Mat& a, bool ta, const Mat& b, bool tb);

// Row-wise softmax, in place over a copy.
Mat softmax_rows(const Mat& x);

// Unfold a [T x C] sequence into conv patches [T_out x (k*C)] for a
// 1-D convolution with the given kernel size and stride ("same"-style
// zero padding of (k-1)/2 on both ends before striding).
Mat im2col(const Mat& x, int kernel, int stride);
// Scatter-add adjoint of im2col.
void col2im_add(const Mat& cols, int kernel, int stride, Mat& dx);

int conv1d_out_len(int t, int kernel, int stride);

namespace ref {
// Textbook serial versions, kept for testing and benchmarking.
void matmul(const Mat& a, bool ta, const Mat& b, bool tb, Mat& c,
            bool accumulate = false);
Mat softmax_rows(const Mat& x);
Mat im2col(const Mat& x, int kernel, int stride);
}  // namespace ref

}  // namespace kernels
}  // namespace srl

#endif  // SRL_KERNELS_HPP_
