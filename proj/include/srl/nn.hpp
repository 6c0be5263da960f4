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

#ifndef SRL_NN_HPP_
#define SRL_NN_HPP_

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "srl/rng.hpp"
#include "srl/tape.hpp"

namespace srl {

// Named parameter tensor plus its Adam moments. Moments live next to the
// value so checkpointing one store captures the whole optimizer state.
struct Param {
  std::string name;
  Mat value;
  Mat m;  // Adam first moment
  Mat v;  // Adam second moment
};

// Owns parameters for one trainable component. The SRL model, each q
// network, and the recombiner each hold their own store, which keeps
// their optimizer states disjoint by construction.
class ParamStore {
 public:
  // Initializer draws are keyed by (seed, name) so parameter values do not
  // depend on creation order.
  Param* create(const std::string& name, int rows, int cols, uint64_t seed,
                double init_scale);
  Param* create_zeros(const std::string& name, int rows, int cols);
  Param* create_const(const std::string& name, int rows, int cols, double v);

  Param* find(const std::string& name);
  const std::vector<std::unique_ptr<Param>>& all() const { return params_; }
  std::vector<Param*> list();

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::unordered_map<std::string, Param*> index_;
};

// One forward pass worth of bookkeeping: which tape, whether parameters
// are trainable leaves or frozen constants, training-time dropout stream.
struct PassCtx {
  Tape* tape = nullptr;
  bool train = false;
  bool freeze_params = false;  // bind params as constants (no grads)
  double dropout_rate = 0.0;
  Rng dropout_rng{0};

  std::unordered_map<const Param*, int> bound;

  int bind(Param& p);
  // Pull accumulated gradients back out after Tape::backward.
  void collect_grads(std::unordered_map<const Param*, Mat>* grads) const;
  int dropout(int x);
};

// Adam with fixed hyperparameters and optional global-norm clipping.
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update to every (param, grad) pair. clip_norm <= 0 disables
  // clipping. Returns the pre-clip global gradient norm.
  double step(const std::vector<std::pair<Param*, const Mat*>>& grads,
              double clip_norm);

  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
};

// --- layers ---

struct Linear {
  Param* w = nullptr;
  Param* b = nullptr;
  void init(ParamStore& s, const std::string& name, int in, int out,
            uint64_t seed);
  int forward(PassCtx& ctx, int x) const;
};

struct LayerNorm {
  Param* gamma = nullptr;
  Param* beta = nullptr;
  void init(ParamStore& s, const std::string& name, int dim);
  int forward(PassCtx& ctx, int x) const;
};

struct MultiHeadAttention {
  Linear wq, wk, wv, wo;
  int n_heads = 1;
  int d_model = 0;
  void init(ParamStore& s, const std::string& name, int d_model, int n_heads,
            uint64_t seed);
  int forward(PassCtx& ctx, int x) const;
};

// Pre-norm transformer block: x + attn(ln(x)), then x + ffn(ln(x)).
struct TransformerBlock {
  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  Linear ffn1, ffn2;
  void init(ParamStore& s, const std::string& name, int d_model, int n_heads,
            int d_ffn, uint64_t seed);
  int forward(PassCtx& ctx, int x) const;
};

struct Conv1d {
  Param* w = nullptr;  // [kernel*in x out]
  Param* b = nullptr;
  int kernel = 3;
  int stride = 1;
  void init(ParamStore& s, const std::string& name, int in, int out, int kernel,
            int stride, uint64_t seed);
  int forward(PassCtx& ctx, int x) const;
};

// Gated recurrent unit; forward returns the final hidden state [1 x hidden].
struct Gru {
  Linear xz, hz, xr, hr, xh, hh;
  int hidden = 0;
  void init(ParamStore& s, const std::string& name, int in, int hidden,
            uint64_t seed);
  int forward_final(PassCtx& ctx, int x_seq) const;
};

}  // namespace srl

#endif  // SRL_NN_HPP_
