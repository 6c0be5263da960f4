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

#ifndef SRL_TRAINER_HPP_
#define SRL_TRAINER_HPP_

#include <functional>
#include <memory>
#include <string>

#include "srl/model.hpp"
#include "srl/objectives.hpp"

namespace srl {

struct TrainConfig {
  int batch_size = 96;   // K, divisible by 4
  int steps = 20000;
  double learning_rate = 1e-3;
  int q_steps_per_step = 5;
  double lambda_mi = 1.0;
  uint64_t seed = 0;
  int checkpoint_interval = 1000;
  int eval_interval = 0;  // 0 disables the eval hook
  double clip_norm = 5.0;
  bool prefetch = true;

  SamplerConfig sampler;
  ModelConfig model;
  MiConfig mi;
  ContrastiveConfig contrastive;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::ordered_json& j);
};

struct StepMetrics {
  int64_t step = 0;
  LossBreakdown loss;
  double q_nll = 0.0;
  double grad_norm = 0.0;

  // Fixed-layout JSON line; %.17g doubles so logs are byte-stable.
  std::string to_log_line() const;
};

class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  // One optimization step: q updates on the current detached embeddings,
  // then a main-model step on the total objective. Throws NumericError
  // with a batch-statistics dump if the loss goes non-finite.
  StepMetrics train_step(const PairBatch& batch);

  // Deterministic batch for a given step index.
  PairBatch batch_for_step(const CorpusManifest& manifest, int64_t step) const;

  // Full loop: fail-fast quota check, metrics log, periodic checkpoints,
  // final checkpoint. Returns the final checkpoint path.
  using EvalHook = std::function<void(Trainer&, int64_t)>;
  std::string run(const CorpusManifest& manifest, const std::string& out_dir,
                  const EvalHook& eval_hook = nullptr);

  void save(const std::string& path) const;
  static std::unique_ptr<Trainer> load(const std::string& path);

  SrlModel& model() { return *model_; }
  const SrlModel& model() const { return *model_; }
  MIEstimatorState& mi() { return *mi_; }
  Adam& main_optimizer() { return *opt_; }
  int64_t step() const { return step_; }
  const TrainConfig& config() const { return cfg_; }

 private:
  TrainConfig cfg_;
  std::unique_ptr<SrlModel> model_;
  std::unique_ptr<MIEstimatorState> mi_;
  std::unique_ptr<Adam> opt_;
  int64_t step_ = 0;
};

}  // namespace srl

#endif  // SRL_TRAINER_HPP_
