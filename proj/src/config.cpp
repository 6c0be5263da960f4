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

#include "srl/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace srl {

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value, got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    c.kv_[key] = value;
  }
  return c;
}

const std::string* Config::find(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return nullptr;
  consumed_[key] = true;
  return &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& def) const {
  const std::string* v = find(key);
  return v ? *v : def;
}

int Config::get_int(const std::string& key, int def) const {
  const std::string* v = find(key);
  if (!v) return def;
  try {
    size_t pos = 0;
    int r = std::stoi(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + *v + "'");
  }
}

double Config::get_double(const std::string& key, double def) const {
  const std::string* v = find(key);
  if (!v) return def;
  char* end = nullptr;
  double r = std::strtod(v->c_str(), &end);
  if (end != v->c_str() + v->size())
    throw ConfigError("config key '" + key + "': expected number, got '" + *v + "'");
  return r;
}

bool Config::get_bool(const std::string& key, bool def) const {
  const std::string* v = find(key);
  if (!v) return def;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + *v + "'");
}

uint64_t Config::get_u64(const std::string& key, uint64_t def) const {
  const std::string* v = find(key);
  if (!v) return def;
  try {
    size_t pos = 0;
    uint64_t r = std::stoull(*v, &pos);
    if (pos != v->size()) throw std::invalid_argument("");
    return r;
  } catch (...) {
    throw ConfigError("config key '" + key + "': expected unsigned integer, got '" +
                      *v + "'");
  }
}

std::vector<std::string> Config::unknown_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : kv_)
    if (!consumed_.count(k)) out.push_back(k);
  return out;
}

SynthCorpusSpec synth_spec_from_config(const Config& c) {
  SynthCorpusSpec s;
  s.n_styles = c.get_int("synth.n_styles", s.n_styles);
  s.n_emotions = c.get_int("synth.n_emotions", s.n_emotions);
  s.n_speakers = c.get_int("synth.n_speakers", s.n_speakers);
  s.n_utts_per_cell = c.get_int("synth.n_utts_per_cell", s.n_utts_per_cell);
  s.gen.frame_rate = c.get_double("synth.frame_rate", s.gen.frame_rate);
  s.gen.feature_dim = c.get_int("synth.feature_dim", s.gen.feature_dim);
  s.gen.dur_min = c.get_double("synth.dur_min", s.gen.dur_min);
  s.gen.dur_max = c.get_double("synth.dur_max", s.gen.dur_max);
  return s;
}

DomainFractions fractions_from_config(const Config& c) {
  DomainFractions f;
  f.style = c.get_double("relabel.style", f.style);
  f.emotion = c.get_double("relabel.emotion", f.emotion);
  f.speaker = c.get_double("relabel.speaker", f.speaker);
  f.unlabeled = c.get_double("relabel.unlabeled", f.unlabeled);
  return f;
}

TrainConfig train_config_from_config(const Config& c) {
  TrainConfig t;
  t.batch_size = c.get_int("train.batch_size", t.batch_size);
  t.steps = c.get_int("train.steps", t.steps);
  t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
  t.q_steps_per_step = c.get_int("train.q_steps_per_step", t.q_steps_per_step);
  t.lambda_mi = c.get_double("objective.lambda_mi", t.lambda_mi);
  t.seed = c.get_u64("train.seed", t.seed);
  t.checkpoint_interval = c.get_int("train.checkpoint_interval", t.checkpoint_interval);
  t.eval_interval = c.get_int("train.eval_interval", t.eval_interval);
  t.clip_norm = c.get_double("train.clip_norm", t.clip_norm);
  t.prefetch = c.get_bool("train.prefetch", t.prefetch);

  t.sampler.slice_seconds = c.get_double("sampler.slice_seconds", t.sampler.slice_seconds);
  t.sampler.frame_rate = c.get_double("synth.frame_rate", t.sampler.frame_rate);
  t.sampler.speaker_ids_global =
      c.get_bool("sampler.speaker_ids_global", t.sampler.speaker_ids_global);

  t.model.trunk.n_layers = c.get_int("model.n_layers", t.model.trunk.n_layers);
  t.model.trunk.n_heads = c.get_int("model.n_heads", t.model.trunk.n_heads);
  t.model.trunk.d_model = c.get_int("model.d_model", t.model.trunk.d_model);
  t.model.trunk.d_ffn = c.get_int("model.d_ffn", t.model.trunk.d_ffn);
  t.model.trunk.dropout = c.get_double("model.dropout", t.model.trunk.dropout);
  t.model.input_dim = c.get_int("synth.feature_dim", t.model.input_dim);
  t.model.d_emb = c.get_int("model.d_emb", t.model.d_emb);
  t.model.conv_channels = c.get_int("model.conv_channels", t.model.conv_channels);
  t.model.gru_hidden = c.get_int("model.gru_hidden", t.model.gru_hidden);
  t.model.frontend_layers = c.get_int("model.frontend_layers", t.model.frontend_layers);

  t.mi.q_hidden = c.get_int("mi.q_hidden", t.mi.q_hidden);
  t.mi.q_lr = c.get_double("mi.q_lr", t.mi.q_lr);
  t.mi.estimator = mi_estimator_from_name(
      c.get_string("mi.estimator", mi_estimator_name(t.mi.estimator)));

  t.contrastive.epsilon = c.get_double("objective.epsilon", t.contrastive.epsilon);
  std::string map = c.get_string("objective.similarity_map", "affine");
  if (map == "affine") t.contrastive.map = SimilarityMap::kAffine;
  else if (map == "sigmoid") t.contrastive.map = SimilarityMap::kTemperedSigmoid;
  else throw ConfigError("objective.similarity_map must be affine|sigmoid");
  t.contrastive.temperature =
      c.get_double("objective.temperature", t.contrastive.temperature);
  return t;
}

ReconConfig recon_config_from_config(const Config& c) {
  ReconConfig r;
  r.d_content = c.get_int("recon.d_content", r.d_content);
  r.hidden = c.get_int("recon.hidden", r.hidden);
  r.fourier_bank = c.get_int("recon.fourier_bank", r.fourier_bank);
  r.steps = c.get_int("recon.steps", r.steps);
  r.learning_rate = c.get_double("recon.learning_rate", r.learning_rate);
  r.batch = c.get_int("recon.batch", r.batch);
  r.holdout_fraction = c.get_double("recon.holdout_fraction", r.holdout_fraction);
  r.scale_loss_weight = c.get_double("recon.scale_loss_weight", r.scale_loss_weight);
  return r;
}

ProbeConfig probe_config_from_config(const Config& c) {
  ProbeConfig p;
  p.iters = c.get_int("eval.probe_iters", p.iters);
  p.lr = c.get_double("eval.probe_lr", p.lr);
  p.weight_decay = c.get_double("eval.probe_weight_decay", p.weight_decay);
  p.train_fraction = c.get_double("eval.probe_train_fraction", p.train_fraction);
  return p;
}

double tsne_perplexity_from_config(const Config& c) {
  return c.get_double("eval.tsne_perplexity", 30.0);
}

const std::vector<ConfigKeyDoc>& config_key_docs() {
  static const std::vector<ConfigKeyDoc> kDocs = {
      {"synth.n_styles", "3", "style categories in the synthetic corpus"},
      {"synth.n_emotions", "6", "emotion categories"},
      {"synth.n_speakers", "5", "speaker categories"},
      {"synth.n_utts_per_cell", "2", "utterances per (style,emotion,speaker) cell"},
      {"synth.frame_rate", "50", "frames per second of synthetic features"},
      {"synth.feature_dim", "16", "feature dimensions per frame"},
      {"synth.dur_min", "4", "min utterance duration, seconds"},
      {"synth.dur_max", "8", "max utterance duration, seconds"},
      {"relabel.style", "0.25", "fraction of utterances assigned to STYLE domain"},
      {"relabel.emotion", "0.25", "fraction assigned to EMOTION domain"},
      {"relabel.speaker", "0.25", "fraction assigned to SPEAKER domain"},
      {"relabel.unlabeled", "0.25", "fraction assigned to UNLABELED domain"},
      {"sampler.slice_seconds", "3.0", "slice length in seconds"},
      {"sampler.speaker_ids_global", "true",
       "speaker ids index one global identity space across corpora"},
      {"model.n_layers", "3", "transformer trunk layers"},
      {"model.n_heads", "2", "attention heads"},
      {"model.d_model", "256", "trunk width"},
      {"model.d_ffn", "1024", "feed-forward width"},
      {"model.dropout", "0.2", "dropout rate (training only)"},
      {"model.d_emb", "256", "embedding dimensionality"},
      {"model.conv_channels", "0", "decoder conv channels (0 = d_model)"},
      {"model.gru_hidden", "0", "decoder GRU width (0 = d_model)"},
      {"model.frontend_layers", "1", "frontend layer-stack depth"},
      {"objective.epsilon", "1e-6", "probability clamp for log safety"},
      {"objective.similarity_map", "affine",
       "similarity-to-probability mapping: affine|sigmoid"},
      {"objective.temperature", "0.1", "sigmoid mapping temperature"},
      {"objective.lambda_mi", "1.0", "weight of the MI term in the objective"},
      {"mi.q_hidden", "256", "hidden width of the variational q networks"},
      {"mi.q_lr", "1e-3", "q network learning rate"},
      {"mi.estimator", "club", "MI estimator: club|l1out"},
      {"train.batch_size", "96", "batch size K (divisible by 4)"},
      {"train.steps", "20000", "training steps"},
      {"train.learning_rate", "1e-3", "main model learning rate"},
      {"train.q_steps_per_step", "5", "q updates per main step"},
      {"train.seed", "0", "run seed"},
      {"train.checkpoint_interval", "1000", "steps between checkpoints"},
      {"train.eval_interval", "0", "steps between eval hooks (0 = off)"},
      {"train.clip_norm", "5.0", "global gradient norm clip"},
      {"train.prefetch", "true", "prepare the next batch one step ahead"},
      {"eval.probe_iters", "400", "linear probe training iterations"},
      {"eval.probe_lr", "0.05", "linear probe learning rate"},
      {"eval.probe_weight_decay", "1e-4", "linear probe L2 penalty"},
      {"eval.probe_train_fraction", "0.8", "probe train split fraction"},
      {"eval.tsne_perplexity", "30", "t-SNE perplexity"},
      {"recon.d_content", "32", "content code dimensionality"},
      {"recon.hidden", "64", "reconstructor hidden width"},
      {"recon.fourier_bank", "8", "positional sin/cos frequency pairs"},
      {"recon.steps", "5000", "reconstructor training steps"},
      {"recon.learning_rate", "1e-3", "reconstructor learning rate"},
      {"recon.batch", "16", "reconstructor batch size"},
      {"recon.holdout_fraction", "0.2", "held-out utterance fraction"},
      {"recon.scale_loss_weight", "1.0", "weight of the residual-scale loss"},
  };
  return kDocs;
}

}  // namespace srl
