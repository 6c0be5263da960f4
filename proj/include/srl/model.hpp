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

#ifndef SRL_MODEL_HPP_
#define SRL_MODEL_HPP_

#include <string>
#include <vector>

#include "json.hpp"
#include "srl/checkpoint.hpp"
#include "srl/corpus.hpp"
#include "srl/nn.hpp"

namespace srl {

// Frame features from the frontend; layer_stack holds the per-layer
// features when the frontend exposes several (empty means single-layer).
struct FrameFeatures {
  Mat frames;                   // [T x D]
  std::vector<Mat> layer_stack; // optional [L][T x D]
};

struct TrunkConfig {
  int n_layers = 3;
  int n_heads = 2;
  int d_model = 256;
  int d_ffn = 1024;
  double dropout = 0.2;

  void validate() const;
};

struct ModelConfig {
  TrunkConfig trunk;
  int input_dim = 16;
  int d_emb = 256;
  int conv_channels = 0;  // 0 -> d_model
  int gru_hidden = 0;     // 0 -> d_model
  int frontend_layers = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::ordered_json& j);
};

// Unit-norm global vectors, one per attribute.
struct EmbeddingTriple {
  Mat style;    // [1 x d_emb]
  Mat emotion;  // [1 x d_emb]
  Mat speaker;  // [1 x d_emb]
  const Mat& get(Attribute a) const;
};

// The representation network: learned convex mix over frontend layers,
// linear input projection with sinusoidal positions, a transformer trunk
// fanning out through three per-attribute heads, and three identical
// decoders (strided convs + GRU + projection) onto the unit hypersphere.
class SrlModel {
 public:
  explicit SrlModel(const ModelConfig& cfg, uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  struct TripleNodes {
    int style = -1;
    int emotion = -1;
    int speaker = -1;
    int get(Attribute a) const;
  };

  // Tape-building forward for one slice. Throws NumericError naming the
  // first block whose activations go non-finite.
  TripleNodes embed_slice(PassCtx& ctx, const FrameFeatures& feats) const;

  // Eval-mode conveniences (dropout off, fresh tape, values only).
  EmbeddingTriple encode_triple(const FrameFeatures& feats) const;
  Mat encode(const FrameFeatures& feats, Attribute which) const;

  // Current softmax-normalized frontend layer weights.
  std::vector<double> layer_mix_weights() const;

  void save(const std::string& path, const nlohmann::ordered_json& extra_meta) const;
  // Restores parameters (and Adam moments) from a checkpoint produced by
  // save(); shapes must match the constructed configuration.
  void load_tensors(const CheckpointData& ckpt);

 private:
  ModelConfig cfg_;
  ParamStore store_;

  Param* layer_mix_logits_ = nullptr;
  Linear input_proj_;
  std::vector<TransformerBlock> blocks_;
  LayerNorm final_ln_;
  struct Decoder {
    Linear head;
    Conv1d conv1, conv2;
    Gru gru;
    Linear out;
  };
  Decoder decoders_[3];

  int layer_mix_node(PassCtx& ctx, const FrameFeatures& feats) const;
  int trunk_forward(PassCtx& ctx, int x) const;
  int decode(PassCtx& ctx, const Decoder& dec, int trunk_out) const;
  void check_finite(PassCtx& ctx, int node, const std::string& where) const;
};

// Plain-value cosine similarity matrix between two stacks of unit-norm
// embeddings ([K x d] each). Throws if any row norm deviates from 1 by
// more than 1e-4.
Mat similarity_matrix(const Mat& set_a, const Mat& set_b);

}  // namespace srl

#endif  // SRL_MODEL_HPP_
