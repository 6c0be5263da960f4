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

#include "srl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srl {
namespace kernels {

namespace {

inline void check_matmul_shapes(const Mat& a, bool ta, const Mat& b, bool tb,
                                int& m, int& k, int& n) {
  m = ta ? a.cols : a.rows;
  k = ta ? a.rows : a.cols;
  int kb = tb ? b.cols : b.rows;
  n = tb ? b.rows : b.cols;
  if (k != kb)
    throw ValidationError("matmul: inner dimension mismatch " + shape_str(a) +
                          (ta ? "^T" : "") + " * " + shape_str(b) +
                          (tb ? "^T" : ""));
}

}  // namespace

void matmul(const Mat& a, bool ta, const Mat& b, bool tb, Mat& c,
            bool accumulate) {
  int m, k, n;
  check_matmul_shapes(a, ta, b, tb, m, k, n);
  if (c.rows != m || c.cols != n) c = Mat(m, n);
  if (!accumulate) std::fill(c.d.begin(), c.d.end(), 0.0);

  if (!ta && !tb) {
    // Row-major friendly: accumulate axpy over k for each output row.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
      double* ci = c.row(i);
      const double* ai = a.row(i);
      for (int kk = 0; kk < k; ++kk) {
        double aik = ai[kk];
        if (aik == 0.0) continue;
        const double* bk = b.row(kk);
        for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
      }
    }
  } else if (!ta && tb) {
    // C(i,j) = dot(a.row(i), b.row(j))
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
      double* ci = c.row(i);
      const double* ai = a.row(i);
      for (int j = 0; j < n; ++j) {
        const double* bj = b.row(j);
        double acc = 0.0;
        for (int kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
        ci[j] += acc;
      }
    }
  } else if (ta && !tb) {
    // C(i,j) = sum_k a(k,i) * b(k,j); parallel over output rows i.
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
      double* ci = c.row(i);
      for (int kk = 0; kk < k; ++kk) {
        double aki = a(kk, i);
        if (aki == 0.0) continue;
        const double* bk = b.row(kk);
        for (int j = 0; j < n; ++j) ci[j] += aki * bk[j];
      }
    }
  } else {
    // C(i,j) = sum_k a(k,i) * b(j,k)
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
      double* ci = c.row(i);
      for (int j = 0; j < n; ++j) {
        const double* bj = b.row(j);
        double acc = 0.0;
        for (int kk = 0; kk < k; ++kk) acc += a(kk, i) * bj[kk];
        ci[j] += acc;
      }
    }
  }
}

Mat matmul(const Mat& a, bool ta, const Mat& b, bool tb) {
  Mat c;
  matmul(a, ta, b, tb, c, false);
  return c;
}

Mat softmax_rows(const Mat& x) {
  Mat y(x.rows, x.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    double* yi = y.row(i);
    double mx = xi[0];
    for (int j = 1; j < x.cols; ++j) mx = std::max(mx, xi[j]);
    double sum = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      sum += yi[j];
    }
    double inv = 1.0 / sum;
    for (int j = 0; j < x.cols; ++j) yi[j] *= inv;
  }
  return y;
}

int conv1d_out_len(int t, int kernel, int stride) {
  // zero padding of (kernel-1)/2 each side, then strided sweep
  int pad = (kernel - 1) / 2;
  int padded = t + 2 * pad;
  return (padded - kernel) / stride + 1;
}

Mat im2col(const Mat& x, int kernel, int stride) {
  int t = x.rows, c = x.cols;
  int pad = (kernel - 1) / 2;
  int t_out = conv1d_out_len(t, kernel, stride);
  Mat cols(t_out, kernel * c);
#pragma omp parallel for schedule(static)
  for (int o = 0; o < t_out; ++o) {
    double* dst = cols.row(o);
    int start = o * stride - pad;
    for (int kk = 0; kk < kernel; ++kk) {
      int src = start + kk;
      if (src >= 0 && src < t) {
        const double* xr = x.row(src);
        for (int j = 0; j < c; ++j) dst[kk * c + j] = xr[j];
      }
      // else: leave zeros (padding)
    }
  }
  return cols;
}

void col2im_add(const Mat& cols, int kernel, int stride, Mat& dx) {
  int t = dx.rows, c = dx.cols;
  int pad = (kernel - 1) / 2;
  int t_out = cols.rows;
  if (cols.cols != kernel * c)
    throw ValidationError("col2im_add: column width mismatch");
  // Serial scatter: output frames can be touched by several patches.
  for (int o = 0; o < t_out; ++o) {
    const double* src = cols.row(o);
    int start = o * stride - pad;
    for (int kk = 0; kk < kernel; ++kk) {
      int dst = start + kk;
      if (dst >= 0 && dst < t) {
        double* xr = dx.row(dst);
        for (int j = 0; j < c; ++j) xr[j] += src[kk * c + j];
      }
    }
  }
}

namespace ref {

void matmul(const Mat& a, bool ta, const Mat& b, bool tb, Mat& c,
            bool accumulate) {
  int m, k, n;
  check_matmul_shapes(a, ta, b, tb, m, k, n);
  if (c.rows != m || c.cols != n) c = Mat(m, n);
  if (!accumulate) std::fill(c.d.begin(), c.d.end(), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk) {
        double av = ta ? a(kk, i) : a(i, kk);
        double bv = tb ? b(j, kk) : b(kk, j);
        acc += av * bv;
      }
      c(i, j) += acc;
    }
}

Mat softmax_rows(const Mat& x) {
  Mat y(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    double mx = x(i, 0);
    for (int j = 1; j < x.cols; ++j) mx = std::max(mx, x(i, j));
    double sum = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      y(i, j) = std::exp(x(i, j) - mx);
      sum += y(i, j);
    }
    for (int j = 0; j < x.cols; ++j) y(i, j) /= sum;
  }
  return y;
}

Mat im2col(const Mat& x, int kernel, int stride) {
  int pad = (kernel - 1) / 2;
  int t_out = conv1d_out_len(x.rows, kernel, stride);
  Mat cols(t_out, kernel * x.cols);
  for (int o = 0; o < t_out; ++o)
    for (int kk = 0; kk < kernel; ++kk) {
      int src = o * stride - pad + kk;
      if (src < 0 || src >= x.rows) continue;
      for (int j = 0; j < x.cols; ++j) cols(o, kk * x.cols + j) = x(src, j);
    }
  return cols;
}

}  // namespace ref

}  // namespace kernels

bool all_finite(const Mat& m) {
  for (double v : m.d)
    if (!std::isfinite(v)) return false;
  return true;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) return std::numeric_limits<double>::infinity();
  double mx = 0.0;
  for (size_t i = 0; i < a.d.size(); ++i)
    mx = std::max(mx, std::abs(a.d[i] - b.d[i]));
  return mx;
}

double l2_norm(const Mat& m) {
  double s = 0.0;
  for (double v : m.d) s += v * v;
  return std::sqrt(s);
}

void warn(const std::string& msg) { std::fprintf(stderr, "warning: %s\n", msg.c_str()); }

}  // namespace srl
