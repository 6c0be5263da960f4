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

#include "srl/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "srl/kernels.hpp"

namespace srl {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

int Tape::push(Mat v, std::vector<int> parents,
               std::function<void(Tape&, int)> bw) {
  bool rg = false;
  for (int p : parents) rg = rg || nodes_[p].requires_grad;
  Node n;
  n.val = std::move(v);
  n.grad = Mat(n.val.rows, n.val.cols);
  n.requires_grad = rg;
  if (rg) n.backward = std::move(bw);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Mat v, bool requires_grad) {
  Node n;
  n.val = std::move(v);
  n.grad = Mat(n.val.rows, n.val.cols);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::backward(int root) {
  Node& r = nodes_[root];
  if (r.val.rows != 1 || r.val.cols != 1)
    throw ValidationError("backward: root must be a 1x1 scalar");
  r.grad(0, 0) = 1.0;
  for (int i = root; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, i);
  }
}

void Tape::check_same_shape(int a, int b, const char* op) const {
  if (!nodes_[a].val.same_shape(nodes_[b].val))
    throw ValidationError(std::string(op) + ": shape mismatch " +
                          shape_str(nodes_[a].val) + " vs " +
                          shape_str(nodes_[b].val));
}

int Tape::add(int a, int b) {
  check_same_shape(a, b, "add");
  Mat v = nodes_[a].val;
  for (size_t i = 0; i < v.size(); ++i) v.d[i] += nodes_[b].val.d[i];
  return push(std::move(v), {a, b}, [a, b](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(a)) {
      Mat& ga = t.grad(a);
      for (size_t i = 0; i < g.size(); ++i) ga.d[i] += g.d[i];
    }
    if (t.requires_grad(b)) {
      Mat& gb = t.grad(b);
      for (size_t i = 0; i < g.size(); ++i) gb.d[i] += g.d[i];
    }
  });
}

int Tape::sub(int a, int b) {
  check_same_shape(a, b, "sub");
  Mat v = nodes_[a].val;
  for (size_t i = 0; i < v.size(); ++i) v.d[i] -= nodes_[b].val.d[i];
  return push(std::move(v), {a, b}, [a, b](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(a)) {
      Mat& ga = t.grad(a);
      for (size_t i = 0; i < g.size(); ++i) ga.d[i] += g.d[i];
    }
    if (t.requires_grad(b)) {
      Mat& gb = t.grad(b);
      for (size_t i = 0; i < g.size(); ++i) gb.d[i] -= g.d[i];
    }
  });
}

int Tape::mul(int a, int b) {
  check_same_shape(a, b, "mul");
  Mat v = nodes_[a].val;
  for (size_t i = 0; i < v.size(); ++i) v.d[i] *= nodes_[b].val.d[i];
  return push(std::move(v), {a, b}, [a, b](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(a)) {
      Mat& ga = t.grad(a);
      const Mat& vb = t.val(b);
      for (size_t i = 0; i < g.size(); ++i) ga.d[i] += g.d[i] * vb.d[i];
    }
    if (t.requires_grad(b)) {
      Mat& gb = t.grad(b);
      const Mat& va = t.val(a);
      for (size_t i = 0; i < g.size(); ++i) gb.d[i] += g.d[i] * va.d[i];
    }
  });
}

int Tape::div(int a, int b) {
  check_same_shape(a, b, "div");
  Mat v = nodes_[a].val;
  for (size_t i = 0; i < v.size(); ++i) v.d[i] /= nodes_[b].val.d[i];
  return push(std::move(v), {a, b}, [a, b](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& va = t.val(a);
    const Mat& vb = t.val(b);
    if (t.requires_grad(a)) {
      Mat& ga = t.grad(a);
      for (size_t i = 0; i < g.size(); ++i) ga.d[i] += g.d[i] / vb.d[i];
    }
    if (t.requires_grad(b)) {
      Mat& gb = t.grad(b);
      for (size_t i = 0; i < g.size(); ++i)
        gb.d[i] -= g.d[i] * va.d[i] / (vb.d[i] * vb.d[i]);
    }
  });
}

int Tape::scale(int a, double s) {
  Mat v = nodes_[a].val;
  for (double& x : v.d) x *= s;
  return push(std::move(v), {a}, [a, s](Tape& t, int self) {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i) ga.d[i] += s * g.d[i];
  });
}

int Tape::add_scalar(int a, double s) {
  Mat v = nodes_[a].val;
  for (double& x : v.d) x += s;
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i) ga.d[i] += g.d[i];
  });
}

int Tape::add_rowvec(int a, int row) {
  const Mat& r = nodes_[row].val;
  if (r.rows != 1 || r.cols != nodes_[a].val.cols)
    throw ValidationError("add_rowvec: expected 1x" +
                          std::to_string(nodes_[a].val.cols));
  Mat v = nodes_[a].val;
  for (int i = 0; i < v.rows; ++i)
    for (int j = 0; j < v.cols; ++j) v(i, j) += r(0, j);
  return push(std::move(v), {a, row}, [a, row](Tape& t, int self) {
    const Mat& g = t.grad(self);
    if (t.requires_grad(a)) {
      Mat& ga = t.grad(a);
      for (size_t i = 0; i < g.size(); ++i) ga.d[i] += g.d[i];
    }
    if (t.requires_grad(row)) {
      Mat& gr = t.grad(row);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) gr(0, j) += g(i, j);
    }
  });
}

int Tape::mul_rowvec(int a, int row) {
  const Mat& r = nodes_[row].val;
  if (r.rows != 1 || r.cols != nodes_[a].val.cols)
    throw ValidationError("mul_rowvec: expected 1x" +
                          std::to_string(nodes_[a].val.cols));
  Mat v = nodes_[a].val;
  for (int i = 0; i < v.rows; ++i)
    for (int j = 0; j < v.cols; ++j) v(i, j) *= r(0, j);
  return push(std::move(v), {a, row}, [a, row](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& va = t.val(a);
    const Mat& vr = t.val(row);
    if (t.requires_grad(a)) {
      Mat& ga = t.grad(a);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) ga(i, j) += g(i, j) * vr(0, j);
    }
    if (t.requires_grad(row)) {
      Mat& gr = t.grad(row);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) gr(0, j) += g(i, j) * va(i, j);
    }
  });
}

int Tape::tanh_op(int a) {
  Mat v = nodes_[a].val;
  for (double& x : v.d) x = std::tanh(x);
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& y = t.val(self);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i)
      ga.d[i] += g.d[i] * (1.0 - y.d[i] * y.d[i]);
  });
}

int Tape::sigmoid(int a) {
  Mat v = nodes_[a].val;
  for (double& x : v.d) x = 1.0 / (1.0 + std::exp(-x));
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& y = t.val(self);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i)
      ga.d[i] += g.d[i] * y.d[i] * (1.0 - y.d[i]);
  });
}

int Tape::gelu(int a) {
  // exact gelu: x * Phi(x); smooth everywhere, which the finite-difference
  // gradient checks rely on
  Mat v = nodes_[a].val;
  for (double& x : v.d) x = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& x = t.val(a);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i) {
      double xi = x.d[i];
      double phi = 0.5 * (1.0 + std::erf(xi * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
      ga.d[i] += g.d[i] * (phi + xi * pdf);
    }
  });
}

int Tape::softplus(int a) {
  Mat v = nodes_[a].val;
  for (double& x : v.d)
    x = x > 30.0 ? x : std::log1p(std::exp(x));
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& x = t.val(a);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i)
      ga.d[i] += g.d[i] / (1.0 + std::exp(-x.d[i]));
  });
}

int Tape::log_op(int a) {
  Mat v = nodes_[a].val;
  for (double& x : v.d) x = std::log(x);
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& x = t.val(a);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i) ga.d[i] += g.d[i] / x.d[i];
  });
}

int Tape::exp_op(int a) {
  Mat v = nodes_[a].val;
  for (double& x : v.d) x = std::exp(x);
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& y = t.val(self);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i) ga.d[i] += g.d[i] * y.d[i];
  });
}

int Tape::matmul(int a, int b, bool ta, bool tb) {
  Mat v = kernels::matmul(nodes_[a].val, ta, nodes_[b].val, tb);
  return push(std::move(v), {a, b}, [a, b, ta, tb](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& va = t.val(a);
    const Mat& vb = t.val(b);
    // dA and dB for the four transpose configurations
    if (t.requires_grad(a)) {
      Mat& ga = t.grad(a);
      if (!ta)
        kernels::matmul(g, false, vb, !tb, ga, true);
      else
        kernels::matmul(vb, tb, g, true, ga, true);
    }
    if (t.requires_grad(b)) {
      Mat& gb = t.grad(b);
      if (!tb)
        kernels::matmul(va, !ta, g, false, gb, true);
      else
        kernels::matmul(g, true, va, ta, gb, true);
    }
  });
}

int Tape::softmax_rows(int a) {
  Mat v = kernels::softmax_rows(nodes_[a].val);
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& y = t.val(self);
    Mat& ga = t.grad(a);
    for (int i = 0; i < g.rows; ++i) {
      const double* yi = y.row(i);
      const double* gi = g.row(i);
      double dot = 0.0;
      for (int j = 0; j < g.cols; ++j) dot += yi[j] * gi[j];
      double* gai = ga.row(i);
      for (int j = 0; j < g.cols; ++j) gai[j] += yi[j] * (gi[j] - dot);
    }
  });
}

int Tape::layer_norm(int x, int gamma, int beta, double eps) {
  const Mat& xv = nodes_[x].val;
  int n = xv.cols;
  Mat v(xv.rows, n);
  Mat xhat(xv.rows, n);
  std::vector<double> inv_std(xv.rows);
  for (int i = 0; i < xv.rows; ++i) {
    const double* xi = xv.row(i);
    double mean = 0.0;
    for (int j = 0; j < n; ++j) mean += xi[j];
    mean /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= n;
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    const double* gm = nodes_[gamma].val.row(0);
    const double* bt = nodes_[beta].val.row(0);
    for (int j = 0; j < n; ++j) {
      double xh = (xi[j] - mean) * is;
      xhat(i, j) = xh;
      v(i, j) = gm[j] * xh + bt[j];
    }
  }
  auto xhat_shared = std::make_shared<Mat>(std::move(xhat));
  auto inv_shared = std::make_shared<std::vector<double>>(std::move(inv_std));
  return push(std::move(v), {x, gamma, beta},
              [x, gamma, beta, xhat_shared, inv_shared](Tape& t, int self) {
                const Mat& g = t.grad(self);
                const Mat& xh = *xhat_shared;
                int n = g.cols;
                const double* gm = t.val(gamma).row(0);
                if (t.requires_grad(gamma)) {
                  Mat& gg = t.grad(gamma);
                  for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < n; ++j) gg(0, j) += g(i, j) * xh(i, j);
                }
                if (t.requires_grad(beta)) {
                  Mat& gb = t.grad(beta);
                  for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < n; ++j) gb(0, j) += g(i, j);
                }
                if (t.requires_grad(x)) {
                  Mat& gx = t.grad(x);
                  for (int i = 0; i < g.rows; ++i) {
                    double sum_gy = 0.0, sum_gyx = 0.0;
                    for (int j = 0; j < n; ++j) {
                      double gy = g(i, j) * gm[j];
                      sum_gy += gy;
                      sum_gyx += gy * xh(i, j);
                    }
                    double is = (*inv_shared)[i];
                    for (int j = 0; j < n; ++j) {
                      double gy = g(i, j) * gm[j];
                      gx(i, j) += is * (gy - sum_gy / n - xh(i, j) * sum_gyx / n);
                    }
                  }
                }
              });
}

int Tape::l2_normalize_rows(int x) {
  const Mat& xv = nodes_[x].val;
  Mat v(xv.rows, xv.cols);
  std::vector<double> norms(xv.rows);
  for (int i = 0; i < xv.rows; ++i) {
    const double* xi = xv.row(i);
    double s = 0.0;
    for (int j = 0; j < xv.cols; ++j) s += xi[j] * xi[j];
    double nrm = std::sqrt(s);
    if (nrm < 1e-8)
      throw NumericError("l2_normalize_rows: zero-norm row " + std::to_string(i));
    norms[i] = nrm;
    for (int j = 0; j < xv.cols; ++j) v(i, j) = xi[j] / nrm;
  }
  auto norms_shared = std::make_shared<std::vector<double>>(std::move(norms));
  return push(std::move(v), {x}, [x, norms_shared](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& y = t.val(self);
    Mat& gx = t.grad(x);
    for (int i = 0; i < g.rows; ++i) {
      double nrm = (*norms_shared)[i];
      const double* gi = g.row(i);
      const double* yi = y.row(i);
      double dot = 0.0;
      for (int j = 0; j < g.cols; ++j) dot += gi[j] * yi[j];
      double* gxi = gx.row(i);
      for (int j = 0; j < g.cols; ++j) gxi[j] += (gi[j] - yi[j] * dot) / nrm;
    }
  });
}

int Tape::im2col(int x, int kernel, int stride) {
  Mat v = kernels::im2col(nodes_[x].val, kernel, stride);
  return push(std::move(v), {x}, [x, kernel, stride](Tape& t, int self) {
    kernels::col2im_add(t.grad(self), kernel, stride, t.grad(x));
  });
}

int Tape::slice_cols(int a, int c0, int c1) {
  const Mat& av = nodes_[a].val;
  if (c0 < 0 || c1 > av.cols || c0 >= c1)
    throw ValidationError("slice_cols: bad range");
  Mat v(av.rows, c1 - c0);
  for (int i = 0; i < av.rows; ++i)
    for (int j = c0; j < c1; ++j) v(i, j - c0) = av(i, j);
  return push(std::move(v), {a}, [a, c0](Tape& t, int self) {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(a);
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) ga(i, c0 + j) += g(i, j);
  });
}

int Tape::slice_rows(int a, int r0, int r1) {
  const Mat& av = nodes_[a].val;
  if (r0 < 0 || r1 > av.rows || r0 >= r1)
    throw ValidationError("slice_rows: bad range");
  Mat v(r1 - r0, av.cols);
  for (int i = r0; i < r1; ++i)
    for (int j = 0; j < av.cols; ++j) v(i - r0, j) = av(i, j);
  return push(std::move(v), {a}, [a, r0](Tape& t, int self) {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(a);
    for (int i = 0; i < g.rows; ++i)
      for (int j = 0; j < g.cols; ++j) ga(r0 + i, j) += g(i, j);
  });
}

int Tape::concat_cols(const std::vector<int>& xs) {
  if (xs.empty()) throw ValidationError("concat_cols: empty input");
  int rows = nodes_[xs[0]].val.rows;
  int cols = 0;
  for (int id : xs) {
    if (nodes_[id].val.rows != rows)
      throw ValidationError("concat_cols: row mismatch");
    cols += nodes_[id].val.cols;
  }
  Mat v(rows, cols);
  int off = 0;
  for (int id : xs) {
    const Mat& m = nodes_[id].val;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < m.cols; ++j) v(i, off + j) = m(i, j);
    off += m.cols;
  }
  std::vector<int> parents = xs;
  return push(std::move(v), parents, [xs](Tape& t, int self) {
    const Mat& g = t.grad(self);
    int off = 0;
    for (int id : xs) {
      Mat& gi = t.grad(id);
      if (t.requires_grad(id))
        for (int i = 0; i < gi.rows; ++i)
          for (int j = 0; j < gi.cols; ++j) gi(i, j) += g(i, off + j);
      off += t.val(id).cols;
    }
  });
}

int Tape::vstack(const std::vector<int>& xs) {
  if (xs.empty()) throw ValidationError("vstack: empty input");
  int cols = nodes_[xs[0]].val.cols;
  int rows = 0;
  for (int id : xs) {
    if (nodes_[id].val.cols != cols)
      throw ValidationError("vstack: column mismatch");
    rows += nodes_[id].val.rows;
  }
  Mat v(rows, cols);
  int off = 0;
  for (int id : xs) {
    const Mat& m = nodes_[id].val;
    for (int i = 0; i < m.rows; ++i)
      for (int j = 0; j < cols; ++j) v(off + i, j) = m(i, j);
    off += m.rows;
  }
  std::vector<int> parents = xs;
  return push(std::move(v), parents, [xs](Tape& t, int self) {
    const Mat& g = t.grad(self);
    int off = 0;
    for (int id : xs) {
      Mat& gi = t.grad(id);
      if (t.requires_grad(id))
        for (int i = 0; i < gi.rows; ++i)
          for (int j = 0; j < gi.cols; ++j) gi(i, j) += g(off + i, j);
      off += t.val(id).rows;
    }
  });
}

int Tape::sum_all(int a) {
  double s = 0.0;
  for (double x : nodes_[a].val.d) s += x;
  Mat v(1, 1);
  v(0, 0) = s;
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    double g = t.grad(self)(0, 0);
    Mat& ga = t.grad(a);
    for (double& x : ga.d) x += g;
  });
}

int Tape::mean_all(int a) {
  size_t n = nodes_[a].val.size();
  double s = 0.0;
  for (double x : nodes_[a].val.d) s += x;
  Mat v(1, 1);
  v(0, 0) = s / static_cast<double>(n);
  return push(std::move(v), {a}, [a, n](Tape& t, int self) {
    double g = t.grad(self)(0, 0) / static_cast<double>(n);
    Mat& ga = t.grad(a);
    for (double& x : ga.d) x += g;
  });
}

int Tape::mean_rows(int a) {
  const Mat& av = nodes_[a].val;
  Mat v(1, av.cols);
  for (int i = 0; i < av.rows; ++i)
    for (int j = 0; j < av.cols; ++j) v(0, j) += av(i, j);
  for (int j = 0; j < av.cols; ++j) v(0, j) /= av.rows;
  int rows = av.rows;
  return push(std::move(v), {a}, [a, rows](Tape& t, int self) {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(a);
    for (int i = 0; i < ga.rows; ++i)
      for (int j = 0; j < ga.cols; ++j) ga(i, j) += g(0, j) / rows;
  });
}

int Tape::row_sum(int a) {
  const Mat& av = nodes_[a].val;
  Mat v(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    double s = 0.0;
    const double* r = av.row(i);
    for (int j = 0; j < av.cols; ++j) s += r[j];
    v(i, 0) = s;
  }
  return push(std::move(v), {a}, [a](Tape& t, int self) {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(a);
    for (int i = 0; i < ga.rows; ++i)
      for (int j = 0; j < ga.cols; ++j) ga(i, j) += g(i, 0);
  });
}

int Tape::diag_mean(int a) {
  const Mat& av = nodes_[a].val;
  if (av.rows != av.cols) throw ValidationError("diag_mean: matrix not square");
  double s = 0.0;
  for (int i = 0; i < av.rows; ++i) s += av(i, i);
  Mat v(1, 1);
  v(0, 0) = s / av.rows;
  int n = av.rows;
  return push(std::move(v), {a}, [a, n](Tape& t, int self) {
    double g = t.grad(self)(0, 0) / n;
    Mat& ga = t.grad(a);
    for (int i = 0; i < n; ++i) ga(i, i) += g;
  });
}

int Tape::dropout(int a, Mat mask) {
  const Mat& av = nodes_[a].val;
  if (!av.same_shape(mask)) throw ValidationError("dropout: mask shape mismatch");
  Mat v = av;
  for (size_t i = 0; i < v.size(); ++i) v.d[i] *= mask.d[i];
  auto mask_shared = std::make_shared<Mat>(std::move(mask));
  return push(std::move(v), {a}, [a, mask_shared](Tape& t, int self) {
    const Mat& g = t.grad(self);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < g.size(); ++i) ga.d[i] += g.d[i] * mask_shared->d[i];
  });
}

int Tape::custom(Mat value, std::vector<int> parents,
                 std::function<void(Tape&, int)> bw) {
  return push(std::move(value), std::move(parents), std::move(bw));
}

double central_difference(const std::function<double()>& f, double* x, double h) {
  double saved = *x;
  *x = saved + h;
  double fp = f();
  *x = saved - h;
  double fm = f();
  *x = saved;
  return (fp - fm) / (2.0 * h);
}

}  // namespace srl
