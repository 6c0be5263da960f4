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

#include "srl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace srl {

void TrainConfig::validate() const {
  if (batch_size < 4 || batch_size % 4 != 0)
    throw ConfigError("train: batch_size must be a positive multiple of 4");
  if (steps < 1) throw ConfigError("train: steps must be >= 1");
  if (q_steps_per_step < 0) throw ConfigError("train: q_steps_per_step must be >= 0");
  model.validate();
  contrastive.validate();
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["batch_size"] = batch_size;
  j["steps"] = steps;
  j["learning_rate"] = learning_rate;
  j["q_steps_per_step"] = q_steps_per_step;
  j["lambda_mi"] = lambda_mi;
  j["seed"] = seed;
  j["checkpoint_interval"] = checkpoint_interval;
  j["eval_interval"] = eval_interval;
  j["clip_norm"] = clip_norm;
  j["prefetch"] = prefetch;
  j["slice_seconds"] = sampler.slice_seconds;
  j["frame_rate"] = sampler.frame_rate;
  j["speaker_ids_global"] = sampler.speaker_ids_global;
  j["model"] = model.to_json();
  j["q_hidden"] = mi.q_hidden;
  j["q_lr"] = mi.q_lr;
  j["mi_estimator"] = mi_estimator_name(mi.estimator);
  j["epsilon"] = contrastive.epsilon;
  j["similarity_map"] =
      contrastive.map == SimilarityMap::kAffine ? "affine" : "sigmoid";
  j["temperature"] = contrastive.temperature;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<int>();
  c.steps = j.at("steps").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.q_steps_per_step = j.at("q_steps_per_step").get<int>();
  c.lambda_mi = j.at("lambda_mi").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.checkpoint_interval = j.at("checkpoint_interval").get<int>();
  c.eval_interval = j.at("eval_interval").get<int>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.prefetch = j.at("prefetch").get<bool>();
  c.sampler.slice_seconds = j.at("slice_seconds").get<double>();
  c.sampler.frame_rate = j.at("frame_rate").get<double>();
  c.sampler.speaker_ids_global = j.at("speaker_ids_global").get<bool>();
  c.model = ModelConfig::from_json(j.at("model"));
  c.mi.q_hidden = j.at("q_hidden").get<int>();
  c.mi.q_lr = j.at("q_lr").get<double>();
  c.mi.estimator = mi_estimator_from_name(j.at("mi_estimator").get<std::string>());
  c.contrastive.epsilon = j.at("epsilon").get<double>();
  c.contrastive.map = j.at("similarity_map").get<std::string>() == "affine"
                          ? SimilarityMap::kAffine
                          : SimilarityMap::kTemperedSigmoid;
  c.contrastive.temperature = j.at("temperature").get<double>();
  c.validate();
  return c;
}

std::string StepMetrics::to_log_line() const {
  std::ostringstream out;
  out << "{\"step\":" << step
      << ",\"l_con_style\":" << format_g17(loss.con_style)
      << ",\"l_con_emotion\":" << format_g17(loss.con_emotion)
      << ",\"l_con_speaker\":" << format_g17(loss.con_speaker)
      << ",\"mi_style_emotion\":" << format_g17(loss.mi_style_emotion)
      << ",\"mi_emotion_speaker\":" << format_g17(loss.mi_emotion_speaker)
      << ",\"mi_speaker_style\":" << format_g17(loss.mi_speaker_style)
      << ",\"q_nll\":" << format_g17(q_nll)
      << ",\"grad_norm\":" << format_g17(grad_norm)
      << ",\"total\":" << format_g17(loss.total) << "}";
  return out.str();
}

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  model_ = std::make_unique<SrlModel>(cfg_.model, cfg_.seed);
  mi_ = std::make_unique<MIEstimatorState>(cfg_.model.d_emb, cfg_.mi, cfg_.seed);
  opt_ = std::make_unique<Adam>(cfg_.learning_rate);
}

PairBatch Trainer::batch_for_step(const CorpusManifest& manifest,
                                  int64_t step) const {
  return compose_batch(manifest, cfg_.batch_size,
                       mix_key(cfg_.seed, stream::kBatchCompose,
                               static_cast<uint64_t>(step)),
                       cfg_.sampler);
}

namespace {

std::string dump_batch_statistics(const PairBatch& batch) {
  BatchStatistics st = batch_statistics(batch);
  std::ostringstream out;
  out << "batch diagnostic: quota_ok=" << (st.quota_ok ? "yes" : "no");
  for (const auto& [d, c] : st.domain_counts) out << " " << d << "=" << c;
  for (const auto& [attr, hist] : st.label_histograms) {
    out << " " << attr << "{";
    bool first = true;
    for (const auto& [label, c] : hist) {
      if (!first) out << ",";
      first = false;
      out << label << ":" << c;
    }
    out << "}";
  }
  return out.str();
}

}  // namespace

StepMetrics Trainer::train_step(const PairBatch& batch) {
  int k = batch.k();
  if (k != cfg_.batch_size)
    throw ValidationError("train_step: batch size " + std::to_string(k) +
                          " != configured " + std::to_string(cfg_.batch_size));
  int64_t this_step = step_ + 1;

  Tape tape;
  PassCtx ctx;
  ctx.tape = &tape;
  ctx.train = true;
  ctx.dropout_rate = cfg_.model.trunk.dropout;
  ctx.dropout_rng = Rng(mix_key(cfg_.seed, stream::kDropout,
                                static_cast<uint64_t>(this_step)));

  // Embed both sets, stack per attribute.
  std::array<std::vector<int>, 3> nodes_a, nodes_b;
  for (int i = 0; i < k; ++i) {
    FrameFeatures fa{batch.set_a[i].frames, {}};
    SrlModel::TripleNodes ta = model_->embed_slice(ctx, fa);
    FrameFeatures fb{batch.set_b[i].frames, {}};
    SrlModel::TripleNodes tb = model_->embed_slice(ctx, fb);
    for (int a = 0; a < 3; ++a) {
      nodes_a[a].push_back(ta.get(static_cast<Attribute>(a)));
      nodes_b[a].push_back(tb.get(static_cast<Attribute>(a)));
    }
  }
  std::array<int, 3> stack_a, stack_b, stack_all;
  for (int a = 0; a < 3; ++a) {
    stack_a[a] = tape.vstack(nodes_a[a]);
    stack_b[a] = tape.vstack(nodes_b[a]);
    stack_all[a] = tape.vstack({stack_a[a], stack_b[a]});
  }

  // q updates on current embeddings, detached from the main gradients.
  double q_nll = 0.0;
  if (cfg_.lambda_mi != 0.0 && cfg_.q_steps_per_step > 0) {
    std::array<Mat, 3> detached;
    for (int a = 0; a < 3; ++a) detached[a] = tape.val(stack_all[a]);
    for (int s = 0; s < cfg_.q_steps_per_step; ++s) q_nll = mi_->update(detached);
  }

  // Masks and similarity matrices.
  std::array<MaskMatrix, 3> masks;
  TotalLossInputs in;
  for (int a = 0; a < 3; ++a) {
    masks[a] = build_mask(batch, static_cast<Attribute>(a), cfg_.sampler);
    in.sim_nodes[a] = tape.matmul(stack_a[a], stack_b[a], false, true);
    in.embeddings_by_attr[a] = stack_all[a];
  }
  for (int a = 0; a < 3; ++a) in.masks[a] = &masks[a];

  TotalLossConfig lcfg;
  lcfg.contrastive = cfg_.contrastive;
  lcfg.lambda_mi = cfg_.lambda_mi;
  LossBreakdown breakdown;
  int loss = total_loss_node(tape, in, lcfg, *mi_, &breakdown);

  if (!std::isfinite(breakdown.total))
    throw NumericError("train_step: non-finite loss at step " +
                       std::to_string(this_step) + "; " +
                       dump_batch_statistics(batch));

  tape.backward(loss);

  std::vector<std::pair<Param*, const Mat*>> grads;
  grads.reserve(ctx.bound.size());
  for (const auto& [param, node] : ctx.bound) {
    const Mat& g = tape.grad(node);
    if (!all_finite(g))
      throw NumericError("train_step: non-finite gradient for " + param->name +
                         " at step " + std::to_string(this_step) + "; " +
                         dump_batch_statistics(batch));
    grads.emplace_back(const_cast<Param*>(param), &g);
  }
  std::sort(grads.begin(), grads.end(),
            [](const auto& a, const auto& b) { return a.first->name < b.first->name; });
  double grad_norm = opt_->step(grads, cfg_.clip_norm);

  step_ = this_step;
  StepMetrics m;
  m.step = this_step;
  m.loss = breakdown;
  m.q_nll = q_nll;
  m.grad_norm = grad_norm;
  return m;
}

std::string Trainer::run(const CorpusManifest& manifest,
                         const std::string& out_dir, const EvalHook& eval_hook) {
  namespace fs = std::filesystem;
  // Fail fast on quota before any work.
  int per_domain = cfg_.batch_size / 4;
  for (Domain d : {Domain::kStyle, Domain::kEmotion, Domain::kSpeaker,
                   Domain::kUnlabeled}) {
    int have = static_cast<int>(manifest.indices_in_domain(d).size());
    if (have < per_domain)
      throw ValidationError(std::string("run_training: domain ") + domain_name(d) +
                            " has " + std::to_string(have) + " utterances, needs " +
                            std::to_string(per_domain));
  }

  fs::create_directories(fs::path(out_dir) / "ckpt");
  std::ofstream metrics(fs::path(out_dir) / "metrics.log",
                        std::ios::binary | std::ios::app);
  if (!metrics) throw IoError("cannot open metrics log in '" + out_dir + "'");

  auto make_batch = [&](int64_t step) { return batch_for_step(manifest, step); };

  std::future<PairBatch> next;
  if (cfg_.prefetch && step_ + 1 <= cfg_.steps)
    next = std::async(std::launch::async, make_batch, step_ + 1);

  while (step_ < cfg_.steps) {
    int64_t this_step = step_ + 1;
    PairBatch batch = cfg_.prefetch ? next.get() : make_batch(this_step);
    if (cfg_.prefetch && this_step + 1 <= cfg_.steps)
      next = std::async(std::launch::async, make_batch, this_step + 1);

    StepMetrics m = train_step(batch);
    metrics << m.to_log_line() << "\n";
    metrics.flush();

    if (cfg_.checkpoint_interval > 0 && this_step % cfg_.checkpoint_interval == 0 &&
        this_step < cfg_.steps) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "step_%06lld.ckpt",
                    static_cast<long long>(this_step));
      save((fs::path(out_dir) / "ckpt" / buf).string());
    }
    if (eval_hook && cfg_.eval_interval > 0 && this_step % cfg_.eval_interval == 0)
      eval_hook(*this, this_step);
  }

  std::string final_path = (fs::path(out_dir) / "ckpt" / "final.ckpt").string();
  save(final_path);
  return final_path;
}

void Trainer::save(const std::string& path) const {
  nlohmann::ordered_json meta;
  meta["kind"] = "srl-trainer";
  meta["step"] = step_;
  meta["train_config"] = cfg_.to_json();
  meta["main_adam_t"] = opt_->t();
  meta["q_adam_t"] = mi_->optimizer_meta();
  meta["model_config"] = cfg_.model.to_json();

  std::vector<std::pair<std::string, const Mat*>> tensors;
  for (const auto& p : model_->params().all()) {
    tensors.emplace_back(p->name, &p->value);
    tensors.emplace_back(p->name + "#adam_m", &p->m);
    tensors.emplace_back(p->name + "#adam_v", &p->v);
  }
  mi_->save_into(&tensors);
  save_checkpoint(path, meta, tensors);
}

std::unique_ptr<Trainer> Trainer::load(const std::string& path) {
  CheckpointData ckpt = load_checkpoint(path);
  if (ckpt.meta.value("kind", "") != "srl-trainer")
    throw ParseError("checkpoint '" + path + "' is not a trainer checkpoint");
  TrainConfig cfg = TrainConfig::from_json(ckpt.meta.at("train_config"));
  auto tr = std::make_unique<Trainer>(cfg);
  tr->step_ = ckpt.meta.at("step").get<int64_t>();
  for (const auto& p : tr->model_->params().all()) {
    p->value = ckpt.tensor(p->name);
    p->m = ckpt.tensor(p->name + "#adam_m");
    p->v = ckpt.tensor(p->name + "#adam_v");
  }
  tr->mi_->load_tensors(ckpt);
  tr->opt_->set_t(ckpt.meta.at("main_adam_t").get<int64_t>());
  tr->mi_->restore_optimizer_meta(ckpt.meta.at("q_adam_t"));
  return tr;
}

}  // namespace srl
