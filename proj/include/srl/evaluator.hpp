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

#ifndef SRL_EVALUATOR_HPP_
#define SRL_EVALUATOR_HPP_

#include <string>
#include <vector>

#include "srl/model.hpp"
#include "srl/sampler.hpp"

namespace srl {

struct EmbeddedUtterance {
  std::string id;
  EmbeddingTriple emb;
  AttributeLabels labels;
  Domain domain = Domain::kUnlabeled;
};
using EmbedTable = std::vector<EmbeddedUtterance>;

// One embedding triple per utterance (center slice, dropout off).
EmbedTable embed_corpus(const SrlModel& model, const CorpusManifest& manifest,
                        const SamplerConfig& cfg);

// Stacks one embedding space of the table into [N x d_emb].
Mat stack_embeddings(const EmbedTable& table, Attribute space);
// Labels for an attribute; throws if any row lacks the label.
std::vector<int> table_labels(const EmbedTable& table, Attribute a);

void save_embed_table(const EmbedTable& table, const std::string& path);

struct ProbeConfig {
  int iters = 400;
  double lr = 0.05;
  double weight_decay = 1e-4;
  double train_fraction = 0.8;
};

struct ProbeReport {
  std::string probe_target;  // attribute being predicted
  std::string probe_source;  // embedding space probed
  double accuracy = 0.0;
  double chance_level = 0.0;  // majority-class share of the full label set
  int n_test = 0;

  nlohmann::ordered_json to_json() const;
};

// Multinomial logistic probe with a seeded 80/20 split by row (rows are
// utterances). Deterministic: zero init, full-batch updates.
ProbeReport linear_probe(const Mat& features, const std::vector<int>& labels,
                         const std::string& target_name,
                         const std::string& source_name, uint64_t seed,
                         const ProbeConfig& cfg = {});

struct ClusterMetrics {
  double silhouette = 0.0;  // cosine distance
  double purity = 0.0;      // best-match purity of seeded k-means, k=#classes
};

ClusterMetrics clustering_metrics(const Mat& features,
                                  const std::vector<int>& labels, uint64_t seed);

// The full report the `eval` subcommand emits: own-attribute probes, the
// speaker-leakage probes, and clustering metrics per attribute space.
nlohmann::ordered_json evaluation_report(const EmbedTable& table, uint64_t seed,
                                         const ProbeConfig& cfg = {});

}  // namespace srl

#endif  // SRL_EVALUATOR_HPP_
