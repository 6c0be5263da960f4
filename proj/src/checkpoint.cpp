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

#include "srl/checkpoint.hpp"

#include <bit>
#include <fstream>

namespace srl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'S', 'R', 'L', 'C', 'K', 'P', 'T', '\n'};
constexpr int kFormatVersion = 1;
}  // namespace

const Mat& CheckpointData::tensor(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end())
    throw ValidationError("checkpoint missing tensor '" + name + "'");
  return it->second;
}

void save_checkpoint(const std::string& path, const nlohmann::ordered_json& meta,
                     const std::vector<std::pair<std::string, const Mat*>>& tensors) {
  nlohmann::ordered_json header;
  header["format_version"] = kFormatVersion;
  header["meta"] = meta;
  nlohmann::ordered_json dir = nlohmann::ordered_json::array();
  uint64_t offset = 0;
  for (const auto& [name, m] : tensors) {
    nlohmann::ordered_json e;
    e["name"] = name;
    e["rows"] = m->rows;
    e["cols"] = m->cols;
    e["offset"] = offset;
    dir.push_back(e);
    offset += m->size() * sizeof(double);
  }
  header["tensors"] = dir;
  std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint '" + path + "'");
  f.write(kMagic, 8);
  uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), 8);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, m] : tensors)
    f.write(reinterpret_cast<const char*>(m->d.data()),
            static_cast<std::streamsize>(m->size() * sizeof(double)));
  if (!f) throw IoError("write failure on checkpoint '" + path + "'");
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path + "'");
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != std::string(kMagic, 8))
    throw ParseError("bad checkpoint magic in '" + path + "'");
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  if (!f || hlen == 0 || hlen > (1ULL << 30))
    throw ParseError("bad checkpoint header length in '" + path + "'");
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw ParseError("truncated checkpoint header in '" + path + "'");

  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint header parse error: " + std::string(e.what()));
  }
  CheckpointData out;
  if (!header.contains("format_version"))
    throw ParseError("checkpoint '" + path + "' missing format_version");
  out.format_version = header["format_version"].get<int>();
  if (out.format_version != kFormatVersion)
    throw ParseError("unsupported checkpoint format_version " +
                     std::to_string(out.format_version));
  out.meta = header.value("meta", nlohmann::ordered_json::object());
  for (const auto& e : header.at("tensors")) {
    std::string name = e.at("name").get<std::string>();
    int rows = e.at("rows").get<int>();
    int cols = e.at("cols").get<int>();
    Mat m(rows, cols);
    f.read(reinterpret_cast<char*>(m.d.data()),
           static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!f) throw ParseError("truncated tensor '" + name + "' in '" + path + "'");
    out.tensors.emplace(std::move(name), std::move(m));
  }
  return out;
}

}  // namespace srl
