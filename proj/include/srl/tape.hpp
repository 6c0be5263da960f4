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

#ifndef SRL_TAPE_HPP_
#define SRL_TAPE_HPP_

#include <functional>
#include <vector>

#include "srl/common.hpp"

namespace srl {

// Reverse-mode autodiff over Mat values. One Tape per forward pass; ops
// append nodes, backward() sweeps the tape in reverse. Node ids are plain
// ints so layer code stays compact.
class Tape {
 public:
  struct Node {
    Mat val;
    Mat grad;  // same shape as val, zero until backward touches it
    std::function<void(Tape&, int)> backward;  // may be empty (leaf/const)
    bool requires_grad = true;
  };

  int leaf(Mat v, bool requires_grad = true);
  int constant(Mat v) { return leaf(std::move(v), false); }

  const Mat& val(int id) const { return nodes_[id].val; }
  Mat& grad(int id) { return nodes_[id].grad; }
  const Mat& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 (root must be 1x1) and runs the reverse sweep.
  void backward(int root);

  // --- elementwise / arithmetic ---
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int div(int a, int b);
  int scale(int a, double s);
  int add_scalar(int a, double s);
  int neg(int a) { return scale(a, -1.0); }
  // broadcast a 1xN row vector across all rows of a
  int add_rowvec(int a, int row);
  int mul_rowvec(int a, int row);

  // --- nonlinearities ---
  int tanh_op(int a);
  int sigmoid(int a);
  int gelu(int a);
  int softplus(int a);
  int log_op(int a);
  int exp_op(int a);

  // --- matrix ---
  int matmul(int a, int b, bool ta = false, bool tb = false);
  int softmax_rows(int a);
  int layer_norm(int x, int gamma, int beta, double eps = 1e-5);
  int l2_normalize_rows(int x);
  int im2col(int x, int kernel, int stride);

  // --- reshaping ---
  int slice_cols(int a, int c0, int c1);   // [*, c0..c1)
  int slice_rows(int a, int r0, int r1);   // [r0..r1, *]
  int concat_cols(const std::vector<int>& xs);
  int vstack(const std::vector<int>& xs);

  // --- reductions ---
  int sum_all(int a);    // -> 1x1
  int mean_all(int a);   // -> 1x1
  int mean_rows(int a);  // [T x D] -> [1 x D]
  int row_sum(int a);    // [N x D] -> [N x 1]
  int diag_mean(int a);  // square -> 1x1

  // --- regularization ---
  // mask entries are 0 or 1/(1-p); computed by the caller so the tape
  // stays free of RNG state
  int dropout(int a, Mat mask);

  // Escape hatch for fused ops (losses, estimator internals).
  int custom(Mat value, std::vector<int> parents,
             std::function<void(Tape&, int)> bw);

  // Convenience for scalars.
  double scalar(int id) const { return nodes_[id].val(0, 0); }

 private:
  std::vector<Node> nodes_;
  int push(Mat v, std::vector<int> parents, std::function<void(Tape&, int)> bw);
  void check_same_shape(int a, int b, const char* op) const;
};

// Central-difference gradient check helper used by tests and the
// acceptance suite: rebuilds the scalar function via `f` after perturbing
// one entry of `target`.
double central_difference(const std::function<double()>& f, double* x, double h);

}  // namespace srl

#endif  // SRL_TAPE_HPP_
