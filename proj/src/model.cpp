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

#include "srl/model.hpp"

#include <cmath>
#include <memory>

#include "srl/kernels.hpp"

namespace srl {

void TrunkConfig::validate() const {
  if (n_layers < 1) throw ConfigError("trunk: n_layers must be >= 1");
  if (n_heads < 1) throw ConfigError("trunk: n_heads must be >= 1");
  if (d_model % n_heads != 0)
    throw ConfigError("trunk: d_model must be divisible by n_heads");
  if (d_ffn < 1) throw ConfigError("trunk: d_ffn must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("trunk: dropout must be in [0,1)");
}

void ModelConfig::validate() const {
  trunk.validate();
  if (input_dim < 1) throw ConfigError("model: input_dim must be >= 1");
  if (d_emb < 1) throw ConfigError("model: d_emb must be >= 1");
  if (frontend_layers < 1) throw ConfigError("model: frontend_layers must be >= 1");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["n_layers"] = trunk.n_layers;
  j["n_heads"] = trunk.n_heads;
  j["d_model"] = trunk.d_model;
  j["d_ffn"] = trunk.d_ffn;
  j["dropout"] = trunk.dropout;
  j["input_dim"] = input_dim;
  j["d_emb"] = d_emb;
  j["conv_channels"] = conv_channels;
  j["gru_hidden"] = gru_hidden;
  j["frontend_layers"] = frontend_layers;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::ordered_json& j) {
  ModelConfig c;
  c.trunk.n_layers = j.at("n_layers").get<int>();
  c.trunk.n_heads = j.at("n_heads").get<int>();
  c.trunk.d_model = j.at("d_model").get<int>();
  c.trunk.d_ffn = j.at("d_ffn").get<int>();
  c.trunk.dropout = j.at("dropout").get<double>();
  c.input_dim = j.at("input_dim").get<int>();
  c.d_emb = j.at("d_emb").get<int>();
  c.conv_channels = j.at("conv_channels").get<int>();
  c.gru_hidden = j.at("gru_hidden").get<int>();
  c.frontend_layers = j.at("frontend_layers").get<int>();
  c.validate();
  return c;
}

const Mat& EmbeddingTriple::get(Attribute a) const {
  switch (a) {
    case Attribute::kStyle: return style;
    case Attribute::kEmotion: return emotion;
    case Attribute::kSpeaker: return speaker;
  }
  throw ValidationError("bad attribute");
}

int SrlModel::TripleNodes::get(Attribute a) const {
  switch (a) {
    case Attribute::kStyle: return style;
    case Attribute::kEmotion: return emotion;
    case Attribute::kSpeaker: return speaker;
  }
  throw ValidationError("bad attribute");
}

SrlModel::SrlModel(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.conv_channels == 0) cfg_.conv_channels = cfg_.trunk.d_model;
  if (cfg_.gru_hidden == 0) cfg_.gru_hidden = cfg_.trunk.d_model;
  int d = cfg_.trunk.d_model;

  layer_mix_logits_ = store_.create_zeros("frontend.layer_mix", 1, cfg_.frontend_layers);
  input_proj_.init(store_, "trunk.input", cfg_.input_dim, d, init_seed);
  blocks_.resize(cfg_.trunk.n_layers);
  for (int i = 0; i < cfg_.trunk.n_layers; ++i)
    blocks_[i].init(store_, "trunk.block" + std::to_string(i), d,
                    cfg_.trunk.n_heads, cfg_.trunk.d_ffn, init_seed);
  final_ln_.init(store_, "trunk.final_ln", d);

  const char* names[3] = {"style", "emotion", "speaker"};
  for (int a = 0; a < 3; ++a) {
    std::string base = std::string("dec.") + names[a];
    decoders_[a].head.init(store_, base + ".head", d, d, init_seed);
    decoders_[a].conv1.init(store_, base + ".conv1", d, cfg_.conv_channels, 3, 2,
                            init_seed);
    decoders_[a].conv2.init(store_, base + ".conv2", cfg_.conv_channels,
                            cfg_.conv_channels, 3, 2, init_seed);
    decoders_[a].gru.init(store_, base + ".gru", cfg_.conv_channels,
                          cfg_.gru_hidden, init_seed);
    decoders_[a].out.init(store_, base + ".out", cfg_.gru_hidden, cfg_.d_emb,
                          init_seed);
  }
}

namespace {
Mat sinusoidal_positions(int t_len, int d) {
  Mat pos(t_len, d);
  for (int t = 0; t < t_len; ++t)
    for (int j = 0; j < d; ++j) {
      double angle = t / std::pow(10000.0, 2.0 * (j / 2) / d);
      pos(t, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pos;
}
}  // namespace

void SrlModel::check_finite(PassCtx& ctx, int node, const std::string& where) const {
  if (!all_finite(ctx.tape->val(node)))
    throw NumericError("non-finite activations in " + where);
}

int SrlModel::layer_mix_node(PassCtx& ctx, const FrameFeatures& feats) const {
  Tape& t = *ctx.tape;
  if (feats.layer_stack.empty()) {
    if (cfg_.frontend_layers != 1)
      throw ValidationError("frontend expects a layer stack of depth " +
                            std::to_string(cfg_.frontend_layers));
    return t.constant(feats.frames);
  }
  int l = static_cast<int>(feats.layer_stack.size());
  if (l != cfg_.frontend_layers)
    throw ValidationError("layer stack depth " + std::to_string(l) +
                          " != configured " + std::to_string(cfg_.frontend_layers));
  if (l == 1) return t.constant(feats.layer_stack[0]);

  int logits = ctx.bind(*layer_mix_logits_);
  int weights = t.softmax_rows(logits);  // [1 x L], convex by construction
  auto stack = std::make_shared<std::vector<Mat>>(feats.layer_stack);
  const Mat& first = (*stack)[0];
  Mat out(first.rows, first.cols);
  const Mat& wv = t.val(weights);
  for (int li = 0; li < l; ++li) {
    const Mat& layer = (*stack)[li];
    if (!layer.same_shape(first))
      throw ValidationError("layer stack shapes differ");
    for (size_t i = 0; i < out.size(); ++i) out.d[i] += wv(0, li) * layer.d[i];
  }
  return t.custom(std::move(out), {weights}, [weights, stack](Tape& tp, int self) {
    const Mat& g = tp.grad(self);
    Mat& gw = tp.grad(weights);
    for (size_t li = 0; li < stack->size(); ++li) {
      const Mat& layer = (*stack)[li];
      double acc = 0.0;
      for (size_t i = 0; i < g.size(); ++i) acc += g.d[i] * layer.d[i];
      gw(0, static_cast<int>(li)) += acc;
    }
  });
}

int SrlModel::trunk_forward(PassCtx& ctx, int x) const {
  Tape& t = *ctx.tape;
  int d = cfg_.trunk.d_model;
  x = input_proj_.forward(ctx, x);
  x = t.add(x, t.constant(sinusoidal_positions(t.val(x).rows, d)));
  x = ctx.dropout(x);
  check_finite(ctx, x, "trunk.input");
  for (size_t i = 0; i < blocks_.size(); ++i) {
    x = blocks_[i].forward(ctx, x);
    check_finite(ctx, x, "trunk.block" + std::to_string(i));
  }
  return final_ln_.forward(ctx, x);
}

int SrlModel::decode(PassCtx& ctx, const Decoder& dec, int trunk_out) const {
  Tape& t = *ctx.tape;
  int h = dec.head.forward(ctx, trunk_out);
  h = t.tanh_op(dec.conv1.forward(ctx, h));
  h = t.tanh_op(dec.conv2.forward(ctx, h));
  h = dec.gru.forward_final(ctx, h);
  h = dec.out.forward(ctx, h);
  return t.l2_normalize_rows(h);
}

SrlModel::TripleNodes SrlModel::embed_slice(PassCtx& ctx,
                                            const FrameFeatures& feats) const {
  int x = layer_mix_node(ctx, feats);
  if (!all_finite(ctx.tape->val(x)))
    throw NumericError("non-finite activations in frontend input");
  int trunk_out = trunk_forward(ctx, x);
  TripleNodes n;
  n.style = decode(ctx, decoders_[0], trunk_out);
  n.emotion = decode(ctx, decoders_[1], trunk_out);
  n.speaker = decode(ctx, decoders_[2], trunk_out);
  check_finite(ctx, n.style, "dec.style");
  check_finite(ctx, n.emotion, "dec.emotion");
  check_finite(ctx, n.speaker, "dec.speaker");
  return n;
}

EmbeddingTriple SrlModel::encode_triple(const FrameFeatures& feats) const {
  Tape tape;
  PassCtx ctx;
  ctx.tape = &tape;
  ctx.train = false;
  ctx.freeze_params = true;
  TripleNodes n = embed_slice(ctx, feats);
  EmbeddingTriple e;
  e.style = tape.val(n.style);
  e.emotion = tape.val(n.emotion);
  e.speaker = tape.val(n.speaker);
  return e;
}

Mat SrlModel::encode(const FrameFeatures& feats, Attribute which) const {
  return encode_triple(feats).get(which);
}

std::vector<double> SrlModel::layer_mix_weights() const {
  const Mat& logits = layer_mix_logits_->value;
  Mat w = kernels::softmax_rows(logits);
  return std::vector<double>(w.d.begin(), w.d.end());
}

void SrlModel::save(const std::string& path,
                    const nlohmann::ordered_json& extra_meta) const {
  nlohmann::ordered_json meta;
  meta["kind"] = "srl-model";
  meta["model_config"] = cfg_.to_json();
  for (auto it = extra_meta.begin(); it != extra_meta.end(); ++it)
    meta[it.key()] = it.value();
  std::vector<std::pair<std::string, const Mat*>> tensors;
  for (const auto& p : store_.all()) {
    tensors.emplace_back(p->name, &p->value);
    tensors.emplace_back(p->name + "#adam_m", &p->m);
    tensors.emplace_back(p->name + "#adam_v", &p->v);
  }
  save_checkpoint(path, meta, tensors);
}

void SrlModel::load_tensors(const CheckpointData& ckpt) {
  for (const auto& p : store_.all()) {
    const Mat& v = ckpt.tensor(p->name);
    if (!v.same_shape(p->value))
      throw ValidationError("checkpoint tensor '" + p->name + "' has shape " +
                            shape_str(v) + ", expected " + shape_str(p->value));
    p->value = v;
    p->m = ckpt.tensor(p->name + "#adam_m");
    p->v = ckpt.tensor(p->name + "#adam_v");
  }
}

Mat similarity_matrix(const Mat& set_a, const Mat& set_b) {
  if (set_a.cols != set_b.cols || set_a.rows != set_b.rows)
    throw ValidationError("similarity_matrix: embedding sets must share shape");
  for (const Mat* s : {&set_a, &set_b})
    for (int i = 0; i < s->rows; ++i) {
      double nrm = 0.0;
      const double* r = s->row(i);
      for (int j = 0; j < s->cols; ++j) nrm += r[j] * r[j];
      if (std::abs(std::sqrt(nrm) - 1.0) > 1e-4)
        throw NumericError("similarity_matrix: row " + std::to_string(i) +
                           " is not unit norm");
    }
  return kernels::matmul(set_a, false, set_b, true);
}

}  // namespace srl
