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

#ifndef SRL_RECOMBINER_HPP_
#define SRL_RECOMBINER_HPP_

#include <string>
#include <vector>

#include "srl/evaluator.hpp"
#include "srl/model.hpp"
#include "srl/sampler.hpp"

namespace srl {

struct ReconConfig {
  int d_content = 32;
  int hidden = 64;
  int fourier_bank = 8;  // positional sin/cos frequency pairs
  int steps = 5000;
  double learning_rate = 1e-3;
  int batch = 16;
  double holdout_fraction = 0.2;
  double scale_loss_weight = 1.0;

  nlohmann::ordered_json to_json() const;
  static ReconConfig from_json(const nlohmann::ordered_json& j);
};

// Small conditional decoder reconstructing synthetic frames from the
// frozen SRL embeddings plus a content code. The content encoder consumes
// whitened residual frames (speaker mean, shared envelope, and noise scale
// removed) together with phase-only positional projections, so the three
// attribute factors can only enter the output through their embeddings.
// A scale head predicts the residual magnitude; generation adds fresh
// noise at that scale so the emotion statistic survives recombination.
class Reconstructor {
 public:
  Reconstructor(int d_emb, int frame_dim, double frame_rate, int slice_frames,
                const ReconConfig& cfg, uint64_t seed);

  const ReconConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  int slice_frames() const { return slice_frames_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  // Content code from raw content frames (whitening included).
  Mat content_code(const Mat& content_frames) const;

  // Deterministic conditional mean [T x D] plus the predicted residual MAD.
  Mat predict_mean(const EmbeddingTriple& emb, const Mat& content_frames,
                   double* predicted_mad) const;

  // Mean prediction plus fresh seeded noise at the predicted scale.
  Mat generate(const EmbeddingTriple& emb, const Mat& content_frames,
               uint64_t noise_seed) const;

  // Tape-building forward for training; returns nodes for the mean frames
  // and the predicted residual MAD.
  struct ForwardNodes {
    int mean = -1;
    int mad = -1;
  };
  ForwardNodes forward(PassCtx& ctx, const EmbeddingTriple& emb,
                       const Mat& content_frames) const;

  void save(const std::string& path) const;
  static std::unique_ptr<Reconstructor> load(const std::string& path);

 private:
  ReconConfig cfg_;
  int d_emb_, frame_dim_, slice_frames_;
  double frame_rate_;
  bool trained_ = false;
  ParamStore store_;
  Conv1d cenc1_, cenc2_;
  Linear content_proj_;
  Linear gate1_, gate2_;
  Linear dec1_, dec2_, dec_out_;
  Linear scale_head_;

  Mat whiten(const Mat& frames) const;
  Mat phase_features(const Mat& frames) const;
  Mat fourier_positions(int t_len) const;
  int content_node(PassCtx& ctx, const Mat& content_frames) const;
};

struct ReconTrainReport {
  double untrained_holdout_mae = 0.0;
  double holdout_mae = 0.0;
  double final_train_mae = 0.0;
  int steps = 0;
};

// Trains the reconstructor against center slices of the manifest with the
// SRL model frozen. Split by utterance; deterministic in seed.
ReconTrainReport train_reconstructor(const SrlModel& srl,
                                     const CorpusManifest& manifest,
                                     const SamplerConfig& scfg,
                                     Reconstructor& recon, uint64_t seed);

// Held-out mean absolute reconstruction error of the current model.
double reconstruction_mae(const SrlModel& srl, const CorpusManifest& manifest,
                          const SamplerConfig& scfg, const Reconstructor& recon,
                          const std::vector<int>& utt_indices);

struct RecombineResult {
  Mat frames;
  // Oracle statistics of the generated frames.
  int oracle_style = -1;
  int oracle_emotion = -1;
  int oracle_speaker = -1;
  double predicted_mad = 0.0;
};

// Conditional generation with references per factor; content_ref supplies
// the residual content code. Throws if the reconstructor is untrained.
RecombineResult recombine(const SrlModel& srl, const Reconstructor& recon,
                          const Utterance& style_ref, const Utterance& emotion_ref,
                          const Utterance& speaker_ref, const Utterance& content_ref,
                          const SamplerConfig& scfg, const CategoryCounts& counts,
                          uint64_t noise_seed);

}  // namespace srl

#endif  // SRL_RECOMBINER_HPP_
