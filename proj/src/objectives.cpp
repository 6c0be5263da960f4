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

#include "srl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace srl {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kVarFloor = 1e-6;
}  // namespace

void ContrastiveConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw ConfigError("contrastive: epsilon must be in (0, 0.5)");
  if (map == SimilarityMap::kTemperedSigmoid && !(temperature > 0.0))
    throw ConfigError("contrastive: temperature must be positive");
}

double similarity_to_prob(double s, const ContrastiveConfig& cfg) {
  if (std::abs(s) > 1.0 + 1e-6)
    throw ValidationError("similarity_to_prob: |s| exceeds 1 (" + format_g17(s) + ")");
  double p;
  if (cfg.map == SimilarityMap::kAffine) {
    p = 0.5 * (s + 1.0);
  } else {
    p = 1.0 / (1.0 + std::exp(-s / cfg.temperature));
  }
  if (p < cfg.epsilon) p = cfg.epsilon;
  if (p > 1.0 - cfg.epsilon) p = 1.0 - cfg.epsilon;
  return p;
}

namespace {

// Derivative dp/ds of similarity_to_prob; exactly zero in the clamped
// regions, mirroring the forward clamp.
double prob_grad(double s, const ContrastiveConfig& cfg) {
  double p, dp;
  if (cfg.map == SimilarityMap::kAffine) {
    p = 0.5 * (s + 1.0);
    dp = 0.5;
  } else {
    double sg = 1.0 / (1.0 + std::exp(-s / cfg.temperature));
    p = sg;
    dp = sg * (1.0 - sg) / cfg.temperature;
  }
  if (p < cfg.epsilon || p > 1.0 - cfg.epsilon) return 0.0;
  return dp;
}

}  // namespace

int contrastive_loss_node(Tape& tape, int sim, const MaskMatrix& mask,
                          const ContrastiveConfig& cfg) {
  cfg.validate();
  const Mat& s = tape.val(sim);
  if (s.rows != mask.k || s.cols != mask.k)
    throw ValidationError("contrastive_loss: similarity is " + shape_str(s) +
                          " but mask is " + std::to_string(mask.k) + "x" +
                          std::to_string(mask.k));
  int known = 0;
  double acc = 0.0;
  for (int i = 0; i < mask.k; ++i)
    for (int j = 0; j < mask.k; ++j) {
      int8_t y = mask.at(i, j);
      if (y < 0) continue;
      ++known;
      double p = similarity_to_prob(s(i, j), cfg);
      acc += (y == 1) ? -std::log(p) : -std::log(1.0 - p);
    }
  Mat v(1, 1);
  if (known == 0) {
    warn("contrastive_loss: mask is all-unknown; loss defined as 0");
  } else {
    v(0, 0) = acc / known;
  }
  auto mask_copy = std::make_shared<MaskMatrix>(mask);
  return tape.custom(std::move(v), {sim},
                     [sim, mask_copy, cfg, known](Tape& t, int self) {
                       if (known == 0) return;
                       double g = t.grad(self)(0, 0) / known;
                       const Mat& s = t.val(sim);
                       Mat& gs = t.grad(sim);
                       for (int i = 0; i < mask_copy->k; ++i)
                         for (int j = 0; j < mask_copy->k; ++j) {
                           int8_t y = mask_copy->at(i, j);
                           if (y < 0) continue;  // exact zero gradient
                           double sij = s(i, j);
                           double p = similarity_to_prob(sij, cfg);
                           double dp = prob_grad(sij, cfg);
                           double dl = (y == 1) ? (-dp / p) : (dp / (1.0 - p));
                           gs(i, j) += g * dl;
                         }
                     });
}

double contrastive_loss(const Mat& sim, const MaskMatrix& mask,
                        const ContrastiveConfig& cfg) {
  Tape tape;
  int s = tape.constant(sim);
  return tape.scalar(contrastive_loss_node(tape, s, mask, cfg));
}

// --- QNet ---

QNet::QNet(const std::string& name, int d_u, int d_v, int hidden, uint64_t seed)
    : name_(name), d_u_(d_u), d_v_(d_v) {
  uint64_t s = mix_key(seed, stream::kQInit);
  l1_.init(store_, name + ".l1", d_u, hidden, s);
  l2_.init(store_, name + ".l2", hidden, hidden, s);
  mu_.init(store_, name + ".mu", hidden, d_v, s);
  var_raw_.init(store_, name + ".var_raw", hidden, d_v, s);
}

QNet::Out QNet::forward(PassCtx& ctx, int u) const {
  Tape& t = *ctx.tape;
  int h = t.tanh_op(l1_.forward(ctx, u));
  h = t.tanh_op(l2_.forward(ctx, h));
  Out out;
  out.mu = mu_.forward(ctx, h);
  out.var = t.add_scalar(t.softplus(var_raw_.forward(ctx, h)), kVarFloor);
  return out;
}

MiEstimator mi_estimator_from_name(const std::string& s) {
  if (s == "club") return MiEstimator::kClub;
  if (s == "l1out") return MiEstimator::kL1Out;
  throw ConfigError("unknown MI estimator '" + s + "' (expected club|l1out)");
}

const char* mi_estimator_name(MiEstimator e) {
  return e == MiEstimator::kClub ? "club" : "l1out";
}

namespace {

// Fused op: P[i][j] = log N(v_i ; mu_j, diag var_j). Row i indexes the
// sample, column j the conditional.
int cross_gaussian_logprob(Tape& tape, int mu, int var, int v) {
  const Mat& mv = tape.val(mu);
  const Mat& vv = tape.val(var);
  const Mat& xv = tape.val(v);
  if (!mv.same_shape(vv) || mv.rows != xv.rows || mv.cols != xv.cols)
    throw ValidationError("cross_gaussian_logprob: shape mismatch");
  int n = mv.rows, d = mv.cols;
  for (double x : vv.d)
    if (!(x >= kVarFloor * 0.5) || !std::isfinite(x))
      throw NumericError("cross_gaussian_logprob: degenerate variance");

  Mat p(n, n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* xi = xv.row(i);
    for (int j = 0; j < n; ++j) {
      const double* mj = mv.row(j);
      const double* sj = vv.row(j);
      double acc = 0.0;
      for (int c = 0; c < d; ++c) {
        double diff = xi[c] - mj[c];
        acc += diff * diff / sj[c] + std::log(sj[c]);
      }
      p(i, j) = -0.5 * (acc + d * kLogTwoPi);
    }
  }
  return tape.custom(std::move(p), {mu, var, v}, [mu, var, v](Tape& t, int self) {
    const Mat& g = t.grad(self);
    const Mat& mv = t.val(mu);
    const Mat& vv = t.val(var);
    const Mat& xv = t.val(v);
    int n = mv.rows, d = mv.cols;
    bool need_mu = t.requires_grad(mu);
    bool need_var = t.requires_grad(var);
    bool need_v = t.requires_grad(v);
    Mat* gmu = need_mu ? &t.grad(mu) : nullptr;
    Mat* gvar = need_var ? &t.grad(var) : nullptr;
    Mat* gv = need_v ? &t.grad(v) : nullptr;
    for (int i = 0; i < n; ++i) {
      const double* xi = xv.row(i);
      const double* gi = g.row(i);
      for (int j = 0; j < n; ++j) {
        double gij = gi[j];
        if (gij == 0.0) continue;
        const double* mj = mv.row(j);
        const double* sj = vv.row(j);
        for (int c = 0; c < d; ++c) {
          double diff = xi[c] - mj[c];
          double inv = 1.0 / sj[c];
          if (need_mu) (*gmu)(j, c) += gij * diff * inv;
          if (need_v) (*gv)(i, c) += gij * (-diff * inv);
          if (need_var)
            (*gvar)(j, c) += gij * 0.5 * (diff * diff * inv * inv - inv);
        }
      }
    }
  });
}

// mean_i log( mean_{j != i} exp(P[i][j]) ) as a tape op.
int logmeanexp_offdiag_mean(Tape& tape, int p) {
  const Mat& pv = tape.val(p);
  int n = pv.rows;
  if (n < 2) throw ValidationError("logmeanexp_offdiag_mean: need N >= 2");
  Mat out(1, 1);
  auto weights = std::make_shared<Mat>(n, n);  // softmax weights per row
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (j != i) mx = std::max(mx, pv(i, j));
    double sum = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) sum += std::exp(pv(i, j) - mx);
    for (int j = 0; j < n; ++j)
      if (j != i) (*weights)(i, j) = std::exp(pv(i, j) - mx) / sum;
    acc += mx + std::log(sum) - std::log(static_cast<double>(n - 1));
  }
  out(0, 0) = acc / n;
  return tape.custom(std::move(out), {p}, [p, weights, n](Tape& t, int self) {
    double g = t.grad(self)(0, 0) / n;
    Mat& gp = t.grad(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j != i) gp(i, j) += g * (*weights)(i, j);
  });
}

}  // namespace

int vclub_mi_node(Tape& tape, int u, int v, const QNet& q, MiEstimator est) {
  PassCtx ctx;
  ctx.tape = &tape;
  ctx.freeze_params = true;  // gradients flow into u/v only
  QNet::Out qo = q.forward(ctx, u);
  int logp = cross_gaussian_logprob(tape, qo.mu, qo.var, v);
  int positive = tape.diag_mean(logp);
  if (est == MiEstimator::kClub) {
    // transpose convention: P[i][j] = log q(v_i|u_j); the mean over all
    // (i,j) pairs is symmetric in that choice
    int negative = tape.mean_all(logp);
    return tape.sub(positive, negative);
  }
  int negative = logmeanexp_offdiag_mean(tape, logp);
  return tape.sub(positive, negative);
}

double vclub_mi(const Mat& u, const Mat& v, const QNet& q, MiEstimator est) {
  if (u.rows != v.rows)
    throw ValidationError("vclub_mi: batches must be aligned");
  Tape tape;
  int un = tape.constant(u);
  int vn = tape.constant(v);
  return tape.scalar(vclub_mi_node(tape, un, vn, q, est));
}

double q_update_step(const Mat& u, const Mat& v, QNet& q, Adam& opt) {
  if (u.rows != v.rows)
    throw ValidationError("q_update_step: batches must be aligned");
  Tape tape;
  PassCtx ctx;
  ctx.tape = &tape;
  ctx.freeze_params = false;
  int un = tape.constant(u);
  int vn = tape.constant(v);
  QNet::Out qo = q.forward(ctx, un);
  int logp = cross_gaussian_logprob(tape, qo.mu, qo.var, vn);
  int nll = tape.neg(tape.diag_mean(logp));
  double nll_value = tape.scalar(nll);
  if (!std::isfinite(nll_value))
    throw NumericError("q_update_step: non-finite NLL");
  tape.backward(nll);
  std::vector<std::pair<Param*, const Mat*>> grads;
  for (const auto& [param, node] : ctx.bound) {
    const Mat& g = tape.grad(node);
    if (!all_finite(g)) throw NumericError("q_update_step: non-finite gradient");
    grads.emplace_back(const_cast<Param*>(param), &g);
  }
  // Deterministic update order regardless of hash-map iteration.
  std::sort(grads.begin(), grads.end(),
            [](const auto& a, const auto& b) { return a.first->name < b.first->name; });
  opt.step(grads, 0.0);
  return nll_value;
}

MIEstimatorState::MIEstimatorState(int d_emb, const MiConfig& cfg, uint64_t seed)
    : cfg_(cfg) {
  for (int i = 0; i < 3; ++i) {
    std::string name = std::string("q.") + attribute_name(kMiPairs[i].u) + "_to_" +
                       attribute_name(kMiPairs[i].v);
    qs_[i] = std::make_unique<QNet>(name, d_emb, d_emb, cfg.q_hidden,
                                    mix_key(seed, static_cast<uint64_t>(i)));
    opts_[i] = std::make_unique<Adam>(cfg.q_lr);
  }
}

double MIEstimatorState::update(const std::array<Mat, 3>& embeddings_by_attr) {
  double nll_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Mat& u = embeddings_by_attr[static_cast<int>(kMiPairs[i].u)];
    const Mat& v = embeddings_by_attr[static_cast<int>(kMiPairs[i].v)];
    nll_sum += q_update_step(u, v, *qs_[i], *opts_[i]);
  }
  return nll_sum / 3.0;
}

void MIEstimatorState::save_into(
    std::vector<std::pair<std::string, const Mat*>>* tensors) const {
  for (const auto& q : qs_)
    for (const auto& p : q->params().all()) {
      tensors->emplace_back(p->name, &p->value);
      tensors->emplace_back(p->name + "#adam_m", &p->m);
      tensors->emplace_back(p->name + "#adam_v", &p->v);
    }
}

void MIEstimatorState::load_tensors(const CheckpointData& ckpt) {
  for (auto& q : qs_)
    for (const auto& p : q->params().all()) {
      p->value = ckpt.tensor(p->name);
      p->m = ckpt.tensor(p->name + "#adam_m");
      p->v = ckpt.tensor(p->name + "#adam_v");
    }
}

nlohmann::ordered_json MIEstimatorState::optimizer_meta() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& o : opts_) j.push_back(o->t());
  return j;
}

void MIEstimatorState::restore_optimizer_meta(const nlohmann::ordered_json& j) {
  for (int i = 0; i < 3; ++i) opts_[i]->set_t(j.at(i).get<int64_t>());
}

int total_loss_node(Tape& tape, const TotalLossInputs& in,
                    const TotalLossConfig& cfg, const MIEstimatorState& mi,
                    LossBreakdown* breakdown) {
  std::array<int, 3> con_nodes;
  for (int a = 0; a < 3; ++a)
    con_nodes[a] =
        contrastive_loss_node(tape, in.sim_nodes[a], *in.masks[a], cfg.contrastive);
  int total = tape.add(tape.add(con_nodes[0], con_nodes[1]), con_nodes[2]);

  std::array<int, 3> mi_nodes = {-1, -1, -1};
  if (cfg.lambda_mi != 0.0) {
    for (int i = 0; i < 3; ++i) {
      int u = in.embeddings_by_attr[static_cast<int>(kMiPairs[i].u)];
      int v = in.embeddings_by_attr[static_cast<int>(kMiPairs[i].v)];
      mi_nodes[i] = vclub_mi_node(tape, u, v, mi.q(i), mi.config().estimator);
    }
    int mi_sum = tape.add(tape.add(mi_nodes[0], mi_nodes[1]), mi_nodes[2]);
    total = tape.add(total, tape.scale(mi_sum, cfg.lambda_mi));
  }

  if (breakdown) {
    breakdown->con_style = tape.scalar(con_nodes[0]);
    breakdown->con_emotion = tape.scalar(con_nodes[1]);
    breakdown->con_speaker = tape.scalar(con_nodes[2]);
    breakdown->mi_style_emotion = mi_nodes[0] >= 0 ? tape.scalar(mi_nodes[0]) : 0.0;
    breakdown->mi_emotion_speaker = mi_nodes[1] >= 0 ? tape.scalar(mi_nodes[1]) : 0.0;
    breakdown->mi_speaker_style = mi_nodes[2] >= 0 ? tape.scalar(mi_nodes[2]) : 0.0;
    breakdown->total = tape.scalar(total);
  }
  return total;
}

}  // namespace srl
