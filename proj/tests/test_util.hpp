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

#ifndef SRL_TESTS_TEST_UTIL_HPP_
#define SRL_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "srl/rng.hpp"
#include "srl/tape.hpp"

namespace srl::testing {

inline Mat random_mat(int r, int c, uint64_t seed, double scale = 1.0) {
  Mat m(r, c);
  Rng rng(seed);
  for (double& v : m.d) v = scale * rng.gaussian();
  return m;
}

// Rebuilds the scalar function from scratch for every perturbed entry and
// compares the analytic gradient of each leaf against central differences.
// Returns the max relative error across all leaf entries.
inline double gradcheck(
    std::vector<Mat> leaves,
    const std::function<int(Tape&, const std::vector<int>&)>& fn,
    double h = 1e-6) {
  // Analytic gradients.
  Tape tape;
  std::vector<int> ids;
  for (const Mat& m : leaves) ids.push_back(tape.leaf(m));
  int root = fn(tape, ids);
  tape.backward(root);
  std::vector<Mat> analytic;
  for (int id : ids) analytic.push_back(tape.grad(id));

  double max_rel = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    for (size_t e = 0; e < leaves[li].size(); ++e) {
      double saved = leaves[li].d[e];
      auto f_at = [&](double v) {
        leaves[li].d[e] = v;
        Tape t2;
        std::vector<int> ids2;
        for (const Mat& m : leaves) ids2.push_back(t2.leaf(m));
        int r2 = fn(t2, ids2);
        return t2.scalar(r2);
      };
      double numeric = (f_at(saved + h) - f_at(saved - h)) / (2.0 * h);
      leaves[li].d[e] = saved;
      double a = analytic[li].d[e];
      double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
    }
  }
  return max_rel;
}

// Scratch directory unique to a test name.
inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / ("srl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace srl::testing

#endif  // SRL_TESTS_TEST_UTIL_HPP_
