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

#ifndef SRL_CONFIG_HPP_
#define SRL_CONFIG_HPP_

#include <map>
#include <string>
#include <vector>

#include "srl/corpus.hpp"
#include "srl/evaluator.hpp"
#include "srl/recombiner.hpp"
#include "srl/trainer.hpp"

namespace srl {

// Flat key=value configuration. '#' starts a comment; keys are dotted
// names. Unknown keys produce a warning, never an error.
class Config {
 public:
  static Config load(const std::string& path);
  static Config from_string(const std::string& text);
  Config() = default;

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  std::string get_string(const std::string& key, const std::string& def) const;
  int get_int(const std::string& key, int def) const;
  double get_double(const std::string& key, double def) const;
  bool get_bool(const std::string& key, bool def) const;
  uint64_t get_u64(const std::string& key, uint64_t def) const;

  // Keys present in the file but never read by any builder.
  std::vector<std::string> unknown_keys() const;

 private:
  std::map<std::string, std::string> kv_;
  mutable std::map<std::string, bool> consumed_;
  const std::string* find(const std::string& key) const;
};

struct SynthCorpusSpec {
  int n_styles = 3;
  int n_emotions = 6;
  int n_speakers = 5;
  int n_utts_per_cell = 2;
  SynthGenConfig gen;
};

// Builders applying config keys over module defaults.
SynthCorpusSpec synth_spec_from_config(const Config& c);
DomainFractions fractions_from_config(const Config& c);
TrainConfig train_config_from_config(const Config& c);
ReconConfig recon_config_from_config(const Config& c);
ProbeConfig probe_config_from_config(const Config& c);
double tsne_perplexity_from_config(const Config& c);

// One row of the defaults table printed by --help.
struct ConfigKeyDoc {
  const char* key;
  const char* def;
  const char* desc;
};
const std::vector<ConfigKeyDoc>& config_key_docs();

}  // namespace srl

#endif  // SRL_CONFIG_HPP_
