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

#ifndef SRL_OBJECTIVES_HPP_
#define SRL_OBJECTIVES_HPP_

#include <array>
#include <string>

#include "srl/checkpoint.hpp"
#include "srl/nn.hpp"
#include "srl/sampler.hpp"

namespace srl {

enum class SimilarityMap { kAffine, kTemperedSigmoid };

struct ContrastiveConfig {
  double epsilon = 1e-6;  // clamp bound keeping log() finite
  SimilarityMap map = SimilarityMap::kAffine;
  double temperature = 0.1;  // sigmoid mode only

  void validate() const;
};

// Maps a cosine similarity in [-1,1] to a probability in (0,1); strictly
// increasing away from the epsilon clamps.
double similarity_to_prob(double s, const ContrastiveConfig& cfg);

// Masked contrastive cross-entropy: mean over known entries of
// -log p (mask 1) / -log(1-p) (mask 0); unknown entries contribute exactly
// zero loss and zero gradient. All-unknown masks yield 0 with a warning.
int contrastive_loss_node(Tape& tape, int sim, const MaskMatrix& mask,
                          const ContrastiveConfig& cfg);
double contrastive_loss(const Mat& sim, const MaskMatrix& mask,
                        const ContrastiveConfig& cfg);

// --- mutual information (vCLUB family) ---

// Variational conditional q(v|u): Gaussian with input-dependent mean and
// diagonal variance, two tanh hidden layers. Variances are softplus
// outputs floored at 1e-6.
class QNet {
 public:
  QNet(const std::string& name, int d_u, int d_v, int hidden, uint64_t seed);

  struct Out {
    int mu = -1;   // [N x d_v]
    int var = -1;  // [N x d_v], strictly positive
  };
  Out forward(PassCtx& ctx, int u) const;

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const std::string& name() const { return name_; }
  int d_u() const { return d_u_; }
  int d_v() const { return d_v_; }

 private:
  std::string name_;
  int d_u_, d_v_;
  ParamStore store_;
  Linear l1_, l2_, mu_, var_raw_;
};

// Which flavor of the estimator to evaluate.
//   kClub:  mean_i log q(v_i|u_i) - mean_{i,j} log q(v_j|u_i).
//           The quantity minimized during training (upper bound; on
//           correlated Gaussians with a converged q it approaches
//           rho^2/(1-rho^2), above the true MI).
//   kL1Out: mean_i [log q(v_i|u_i) - log mean_{j!=i} q(v_i|u_j)], the
//           leave-one-out marginal variant; with a converged q this
//           estimates the MI itself and is used for calibrated reporting.
enum class MiEstimator { kClub, kL1Out };

MiEstimator mi_estimator_from_name(const std::string& s);
const char* mi_estimator_name(MiEstimator e);

// Tape-building MI estimate. q parameters enter as constants: gradients
// flow into u/v only. Throws NumericError on degenerate variances.
int vclub_mi_node(Tape& tape, int u, int v, const QNet& q, MiEstimator est);
double vclub_mi(const Mat& u, const Mat& v, const QNet& q, MiEstimator est);

// One maximum-likelihood step on q from detached samples; returns the NLL
// before the update. Gradients never reach the embeddings.
double q_update_step(const Mat& u, const Mat& v, QNet& q, Adam& opt);

// The three directed q networks covering each unordered attribute pair
// once: (style->emotion), (emotion->speaker), (speaker->style).
struct MiPair {
  Attribute u;
  Attribute v;
};
constexpr std::array<MiPair, 3> kMiPairs = {
    MiPair{Attribute::kStyle, Attribute::kEmotion},
    MiPair{Attribute::kEmotion, Attribute::kSpeaker},
    MiPair{Attribute::kSpeaker, Attribute::kStyle}};

struct MiConfig {
  int q_hidden = 256;
  double q_lr = 1e-3;
  MiEstimator estimator = MiEstimator::kClub;
};

class MIEstimatorState {
 public:
  MIEstimatorState(int d_emb, const MiConfig& cfg, uint64_t seed);

  QNet& q(int pair_index) { return *qs_[pair_index]; }
  const QNet& q(int pair_index) const { return *qs_[pair_index]; }
  Adam& optimizer(int pair_index) { return *opts_[pair_index]; }
  const MiConfig& config() const { return cfg_; }

  // One q update per pair on the given per-attribute embedding stacks.
  // Returns the mean NLL across pairs.
  double update(const std::array<Mat, 3>& embeddings_by_attr);

  void save_into(std::vector<std::pair<std::string, const Mat*>>* tensors) const;
  void load_tensors(const CheckpointData& ckpt);
  nlohmann::ordered_json optimizer_meta() const;
  void restore_optimizer_meta(const nlohmann::ordered_json& j);

 private:
  MiConfig cfg_;
  std::array<std::unique_ptr<QNet>, 3> qs_;
  std::array<std::unique_ptr<Adam>, 3> opts_;
};

// --- total objective ---

struct TotalLossConfig {
  ContrastiveConfig contrastive;
  double lambda_mi = 1.0;
};

struct LossBreakdown {
  double con_style = 0.0;
  double con_emotion = 0.0;
  double con_speaker = 0.0;
  double mi_style_emotion = 0.0;
  double mi_emotion_speaker = 0.0;
  double mi_speaker_style = 0.0;
  double total = 0.0;

  double contrastive_sum() const { return con_style + con_emotion + con_speaker; }
  double mi_sum() const {
    return mi_style_emotion + mi_emotion_speaker + mi_speaker_style;
  }
};

// Builds L = sum_attr L_con(attr) + lambda * sum_pairs I(u,v) on the tape.
// sim nodes/masks are per attribute; mi_u/mi_v are the concatenated
// (set A + set B) embedding stacks per attribute.
struct TotalLossInputs {
  std::array<int, 3> sim_nodes;               // per attribute
  std::array<const MaskMatrix*, 3> masks;     // per attribute
  std::array<int, 3> embeddings_by_attr;      // [2K x d_emb] nodes
};

int total_loss_node(Tape& tape, const TotalLossInputs& in,
                    const TotalLossConfig& cfg, const MIEstimatorState& mi,
                    LossBreakdown* breakdown);

}  // namespace srl

#endif  // SRL_OBJECTIVES_HPP_
