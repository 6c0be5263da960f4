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

#ifndef SRL_COMMON_HPP_
#define SRL_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace srl {

// Error taxonomy. The CLI maps ConfigError to exit 3 and everything else
// to exit 1; tests match on the concrete type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

void warn(const std::string& msg);

// Dense row-major matrix of doubles. The one value type the whole project
// computes with; vectors are 1xN or Nx1 matrices.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> d;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), d(static_cast<size_t>(r) * c, 0.0) {}
  Mat(int r, int c, double fill)
      : rows(r), cols(c), d(static_cast<size_t>(r) * c, fill) {}

  static Mat from_rows(int r, int c, std::vector<double> values) {
    Mat m;
    m.rows = r;
    m.cols = c;
    if (values.size() != static_cast<size_t>(r) * c)
      throw ValidationError("Mat::from_rows: size mismatch");
    m.d = std::move(values);
    return m;
  }

  double& operator()(int i, int j) { return d[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const {
    return d[static_cast<size_t>(i) * cols + j];
  }
  double* row(int i) { return d.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return d.data() + static_cast<size_t>(i) * cols; }
  size_t size() const { return d.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  bool empty() const { return d.empty(); }
};

bool all_finite(const Mat& m);
double max_abs_diff(const Mat& a, const Mat& b);
double l2_norm(const Mat& m);

// Shortest exact decimal for a double ("%.17g"); used wherever byte-stable
// text output matters (metrics log, sidecars).
inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::string shape_str(const Mat& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace srl

#endif  // SRL_COMMON_HPP_
