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

#include "srl/nn.hpp"

#include <cmath>

namespace srl {

namespace {
// FNV-1a over the parameter name; combined with the model seed this pins
// every initial tensor independent of creation order.
uint64_t name_hash(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace

Param* ParamStore::create(const std::string& name, int rows, int cols,
                          uint64_t seed, double init_scale) {
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = Mat(rows, cols);
  p->m = Mat(rows, cols);
  p->v = Mat(rows, cols);
  Rng rng(mix_key(seed, stream::kParamInit, name_hash(name)));
  for (double& x : p->value.d) x = init_scale * rng.gaussian();
  Param* raw = p.get();
  if (index_.count(name)) throw ValidationError("duplicate parameter " + name);
  index_[name] = raw;
  params_.push_back(std::move(p));
  return raw;
}

Param* ParamStore::create_zeros(const std::string& name, int rows, int cols) {
  return create_const(name, rows, cols, 0.0);
}

Param* ParamStore::create_const(const std::string& name, int rows, int cols,
                                double v) {
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = Mat(rows, cols, v);
  p->m = Mat(rows, cols);
  p->v = Mat(rows, cols);
  Param* raw = p.get();
  if (index_.count(name)) throw ValidationError("duplicate parameter " + name);
  index_[name] = raw;
  params_.push_back(std::move(p));
  return raw;
}

Param* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

std::vector<Param*> ParamStore::list() {
  std::vector<Param*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

int PassCtx::bind(Param& p) {
  auto it = bound.find(&p);
  if (it != bound.end()) return it->second;
  int id = freeze_params ? tape->constant(p.value) : tape->leaf(p.value);
  bound.emplace(&p, id);
  return id;
}

void PassCtx::collect_grads(std::unordered_map<const Param*, Mat>* grads) const {
  for (const auto& [p, id] : bound) (*grads)[p] = tape->grad(id);
}

int PassCtx::dropout(int x) {
  if (!train || dropout_rate <= 0.0) return x;
  const Mat& v = tape->val(x);
  Mat mask(v.rows, v.cols);
  double keep = 1.0 - dropout_rate;
  double scale = 1.0 / keep;
  for (double& m : mask.d) m = (dropout_rng.uniform() < keep) ? scale : 0.0;
  return tape->dropout(x, std::move(mask));
}

double Adam::step(const std::vector<std::pair<Param*, const Mat*>>& grads,
                  double clip_norm) {
  double sq = 0.0;
  for (const auto& [p, g] : grads)
    for (double x : g->d) sq += x * x;
  double norm = std::sqrt(sq);
  double clip_scale = 1.0;
  if (clip_norm > 0.0 && norm > clip_norm) clip_scale = clip_norm / norm;

  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [p, g] : grads) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      double gi = g->d[i] * clip_scale;
      p->m.d[i] = beta1_ * p->m.d[i] + (1.0 - beta1_) * gi;
      p->v.d[i] = beta2_ * p->v.d[i] + (1.0 - beta2_) * gi * gi;
      double mhat = p->m.d[i] / bc1;
      double vhat = p->v.d[i] / bc2;
      p->value.d[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
  return norm;
}

void Linear::init(ParamStore& s, const std::string& name, int in, int out,
                  uint64_t seed) {
  w = s.create(name + ".w", in, out, seed, 1.0 / std::sqrt(static_cast<double>(in)));
  b = s.create_zeros(name + ".b", 1, out);
}

int Linear::forward(PassCtx& ctx, int x) const {
  Tape& t = *ctx.tape;
  return t.add_rowvec(t.matmul(x, ctx.bind(*w)), ctx.bind(*b));
}

void LayerNorm::init(ParamStore& s, const std::string& name, int dim) {
  gamma = s.create_const(name + ".gamma", 1, dim, 1.0);
  beta = s.create_zeros(name + ".beta", 1, dim);
}

int LayerNorm::forward(PassCtx& ctx, int x) const {
  return ctx.tape->layer_norm(x, ctx.bind(*gamma), ctx.bind(*beta));
}

void MultiHeadAttention::init(ParamStore& s, const std::string& name,
                              int d_model_in, int heads, uint64_t seed) {
  if (d_model_in % heads != 0)
    throw ConfigError("attention: d_model must be divisible by n_heads");
  d_model = d_model_in;
  n_heads = heads;
  wq.init(s, name + ".wq", d_model, d_model, seed);
  wk.init(s, name + ".wk", d_model, d_model, seed);
  wv.init(s, name + ".wv", d_model, d_model, seed);
  wo.init(s, name + ".wo", d_model, d_model, seed);
}

int MultiHeadAttention::forward(PassCtx& ctx, int x) const {
  Tape& t = *ctx.tape;
  int q = wq.forward(ctx, x);
  int k = wk.forward(ctx, x);
  int v = wv.forward(ctx, x);
  int dh = d_model / n_heads;
  double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<int> head_outs;
  head_outs.reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    int qh = t.slice_cols(q, h * dh, (h + 1) * dh);
    int kh = t.slice_cols(k, h * dh, (h + 1) * dh);
    int vh = t.slice_cols(v, h * dh, (h + 1) * dh);
    int scores = t.scale(t.matmul(qh, kh, false, true), inv_sqrt_dh);
    int probs = t.softmax_rows(scores);
    probs = ctx.dropout(probs);
    head_outs.push_back(t.matmul(probs, vh));
  }
  int cat = n_heads == 1 ? head_outs[0] : t.concat_cols(head_outs);
  return wo.forward(ctx, cat);
}

void TransformerBlock::init(ParamStore& s, const std::string& name, int d_model,
                            int n_heads, int d_ffn, uint64_t seed) {
  ln1.init(s, name + ".ln1", d_model);
  ln2.init(s, name + ".ln2", d_model);
  attn.init(s, name + ".attn", d_model, n_heads, seed);
  ffn1.init(s, name + ".ffn1", d_model, d_ffn, seed);
  ffn2.init(s, name + ".ffn2", d_ffn, d_model, seed);
}

int TransformerBlock::forward(PassCtx& ctx, int x) const {
  Tape& t = *ctx.tape;
  int a = attn.forward(ctx, ln1.forward(ctx, x));
  x = t.add(x, ctx.dropout(a));
  int f = ffn2.forward(ctx, t.gelu(ffn1.forward(ctx, ln2.forward(ctx, x))));
  return t.add(x, ctx.dropout(f));
}

void Conv1d::init(ParamStore& s, const std::string& name, int in, int out,
                  int kernel_in, int stride_in, uint64_t seed) {
  kernel = kernel_in;
  stride = stride_in;
  w = s.create(name + ".w", kernel * in, out, seed,
               1.0 / std::sqrt(static_cast<double>(kernel * in)));
  b = s.create_zeros(name + ".b", 1, out);
}

int Conv1d::forward(PassCtx& ctx, int x) const {
  Tape& t = *ctx.tape;
  int cols = t.im2col(x, kernel, stride);
  return t.add_rowvec(t.matmul(cols, ctx.bind(*w)), ctx.bind(*b));
}

void Gru::init(ParamStore& s, const std::string& name, int in, int hidden_in,
               uint64_t seed) {
  hidden = hidden_in;
  xz.init(s, name + ".xz", in, hidden, seed);
  hz.init(s, name + ".hz", hidden, hidden, seed);
  xr.init(s, name + ".xr", in, hidden, seed);
  hr.init(s, name + ".hr", hidden, hidden, seed);
  xh.init(s, name + ".xh", in, hidden, seed);
  hh.init(s, name + ".hh", hidden, hidden, seed);
}

int Gru::forward_final(PassCtx& ctx, int x_seq) const {
  Tape& t = *ctx.tape;
  int steps = t.val(x_seq).rows;
  int h = t.constant(Mat(1, hidden));
  for (int i = 0; i < steps; ++i) {
    int xt = t.slice_rows(x_seq, i, i + 1);
    int z = t.sigmoid(t.add(xz.forward(ctx, xt), hz.forward(ctx, h)));
    int r = t.sigmoid(t.add(xr.forward(ctx, xt), hr.forward(ctx, h)));
    int hcand = t.tanh_op(t.add(xh.forward(ctx, xt), hh.forward(ctx, t.mul(r, h))));
    // h' = (1-z) .* h + z .* hcand
    int one_minus_z = t.add_scalar(t.neg(z), 1.0);
    h = t.add(t.mul(one_minus_z, h), t.mul(z, hcand));
  }
  return h;
}

}  // namespace srl
