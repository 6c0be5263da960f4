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

#ifndef SRL_SAMPLER_HPP_
#define SRL_SAMPLER_HPP_

#include <map>
#include <string>
#include <vector>

#include "srl/corpus.hpp"

namespace srl {

struct SamplerConfig {
  double slice_seconds = 3.0;
  double frame_rate = 50.0;
  // Whether speaker ids index one global identity space across corpora;
  // when false, speaker pairs across different domains become unknown (-1)
  // instead of negatives.
  bool speaker_ids_global = true;

  int slice_frames() const;
};

struct SpeechSlice {
  std::string parent_id;
  double start = 0.0;  // seconds
  Mat frames;          // [T_s x D]
  AttributeLabels labels;
  Domain domain = Domain::kUnlabeled;
};

// Two aligned sets of slices; index i of both sets comes from the same
// utterance. Quarters: [0,K/4) STYLE, [K/4,K/2) EMOTION, [K/2,3K/4)
// SPEAKER, [3K/4,K) UNLABELED.
struct PairBatch {
  std::vector<SpeechSlice> set_a;
  std::vector<SpeechSlice> set_b;
  int k() const { return static_cast<int>(set_a.size()); }
};

// K x K ground-truth grid for one attribute; entries in {-1, 0, 1}.
struct MaskMatrix {
  Attribute attribute = Attribute::kStyle;
  int k = 0;
  std::vector<int8_t> entries;  // row-major

  int8_t at(int i, int j) const { return entries[static_cast<size_t>(i) * k + j]; }
  int8_t& at(int i, int j) { return entries[static_cast<size_t>(i) * k + j]; }

  std::string to_grid_string() const;
  static MaskMatrix from_grid_string(Attribute a, const std::string& text);
};

SpeechSlice extract_slice(const Utterance& utt, uint64_t offset_seed,
                          const SamplerConfig& cfg);
// Slice from precomputed frames (avoids re-rendering when the caller
// already has them).
SpeechSlice extract_slice_from_frames(const Utterance& utt, const Mat& frames,
                                      uint64_t offset_seed, const SamplerConfig& cfg);
// Deterministic center slice used by evaluation.
SpeechSlice center_slice(const Utterance& utt, const SamplerConfig& cfg);

PairBatch compose_batch(const CorpusManifest& manifest, int k, uint64_t seed,
                        const SamplerConfig& cfg);

MaskMatrix build_mask(const PairBatch& batch, Attribute attribute,
                      const SamplerConfig& cfg);

struct BatchStatistics {
  std::map<std::string, int> domain_counts;  // name -> count over set_a
  // attribute -> label -> count (both sets)
  std::map<std::string, std::map<int, int>> label_histograms;
  bool quota_ok = false;  // quarters match the declared domain layout
};

BatchStatistics batch_statistics(const PairBatch& batch);

}  // namespace srl

#endif  // SRL_SAMPLER_HPP_
