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

#ifndef SRL_CHECKPOINT_HPP_
#define SRL_CHECKPOINT_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "srl/common.hpp"

namespace srl {

// Self-describing archive of named double tensors plus a JSON metadata
// blob. Tensor bytes are stored exactly, so a save/load round trip is
// bitwise lossless.
struct CheckpointData {
  int format_version = 0;
  nlohmann::ordered_json meta;
  std::map<std::string, Mat> tensors;

  const Mat& tensor(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const nlohmann::ordered_json& meta,
                     const std::vector<std::pair<std::string, const Mat*>>& tensors);

CheckpointData load_checkpoint(const std::string& path);

}  // namespace srl

#endif  // SRL_CHECKPOINT_HPP_
