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

#ifndef SRL_TSNE_HPP_
#define SRL_TSNE_HPP_

#include <string>
#include <vector>

#include "srl/common.hpp"

namespace srl {

struct TsneConfig {
  double perplexity = 30.0;
  int iters = 500;
  int exaggeration_iters = 100;
  double exaggeration = 4.0;
  double learning_rate = 100.0;
  uint64_t seed = 0;
};

// Exact (O(N^2)) t-SNE to 2-D; deterministic given the seed.
Mat tsne_2d(const Mat& x, const TsneConfig& cfg);

// 24-bit BMP scatter plot, one dot per row of coords, colored by class id.
void write_bmp_scatter(const Mat& coords, const std::vector<int>& color_ids,
                       const std::string& path, int size_px = 800);

// Tab-separated sidecar: id <tab> label <tab> x <tab> y, %.17g coordinates.
void write_coords_tsv(const Mat& coords, const std::vector<std::string>& ids,
                      const std::vector<int>& labels, const std::string& path);
Mat read_coords_tsv(const std::string& path, std::vector<std::string>* ids,
                    std::vector<int>* labels);

}  // namespace srl

#endif  // SRL_TSNE_HPP_
