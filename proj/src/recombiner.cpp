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

#include "srl/recombiner.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace srl {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
// MAD of a centered Gaussian is sigma*sqrt(2/pi); generation converts the
// predicted MAD back to a standard deviation.
constexpr double kMadToSigma = 1.2533141373155002512;

// mean |a - b| as a fused tape op (subgradient 0 at ties).
int mae_node(Tape& tape, int a, const Mat& target) {
  const Mat& av = tape.val(a);
  if (!av.same_shape(target)) throw ValidationError("mae_node: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < av.size(); ++i) acc += std::abs(av.d[i] - target.d[i]);
  Mat v(1, 1);
  size_t n = av.size();
  v(0, 0) = acc / static_cast<double>(n);
  auto t_shared = std::make_shared<Mat>(target);
  return tape.custom(std::move(v), {a}, [a, t_shared, n](Tape& t, int self) {
    double g = t.grad(self)(0, 0) / static_cast<double>(n);
    const Mat& av = t.val(a);
    Mat& ga = t.grad(a);
    for (size_t i = 0; i < av.size(); ++i) {
      double diff = av.d[i] - t_shared->d[i];
      ga.d[i] += g * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
    }
  });
}

// |x - c| for a 1x1 node.
int abs_diff_scalar_node(Tape& tape, int x, double c) {
  double v = tape.val(x)(0, 0) - c;
  Mat out(1, 1);
  out(0, 0) = std::abs(v);
  return tape.custom(std::move(out), {x}, [x, c](Tape& t, int self) {
    double g = t.grad(self)(0, 0);
    double diff = t.val(x)(0, 0) - c;
    t.grad(x)(0, 0) += g * (diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
  });
}

double frames_mad(const Mat& a, const Mat& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += std::abs(a.d[i] - b.d[i]);
  return acc / static_cast<double>(a.size());
}

}  // namespace

nlohmann::ordered_json ReconConfig::to_json() const {
  nlohmann::ordered_json j;
  j["d_content"] = d_content;
  j["hidden"] = hidden;
  j["fourier_bank"] = fourier_bank;
  j["steps"] = steps;
  j["learning_rate"] = learning_rate;
  j["batch"] = batch;
  j["holdout_fraction"] = holdout_fraction;
  j["scale_loss_weight"] = scale_loss_weight;
  return j;
}

ReconConfig ReconConfig::from_json(const nlohmann::ordered_json& j) {
  ReconConfig c;
  c.d_content = j.at("d_content").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.fourier_bank = j.at("fourier_bank").get<int>();
  c.steps = j.at("steps").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch = j.at("batch").get<int>();
  c.holdout_fraction = j.at("holdout_fraction").get<double>();
  c.scale_loss_weight = j.at("scale_loss_weight").get<double>();
  return c;
}

Reconstructor::Reconstructor(int d_emb, int frame_dim, double frame_rate,
                             int slice_frames, const ReconConfig& cfg,
                             uint64_t seed)
    : cfg_(cfg),
      d_emb_(d_emb),
      frame_dim_(frame_dim),
      slice_frames_(slice_frames),
      frame_rate_(frame_rate) {
  int c = 32;  // content conv channels
  cenc1_.init(store_, "recon.cenc1", frame_dim, c, 3, 2, seed);
  cenc2_.init(store_, "recon.cenc2", c, c, 3, 2, seed);
  content_proj_.init(store_, "recon.content_proj", c + 2 * cfg.fourier_bank,
                     cfg.d_content, seed);
  int cond_dim = 3 * d_emb + cfg.d_content;
  gate1_.init(store_, "recon.gate1", cond_dim, cfg.hidden, seed);
  gate2_.init(store_, "recon.gate2", cfg.hidden, 2 * cfg.fourier_bank, seed);
  dec1_.init(store_, "recon.dec1", 2 * cfg.fourier_bank + cond_dim, cfg.hidden, seed);
  dec2_.init(store_, "recon.dec2", cfg.hidden, cfg.hidden, seed);
  dec_out_.init(store_, "recon.dec_out", cfg.hidden, frame_dim, seed);
  scale_head_.init(store_, "recon.scale_head", cond_dim, 1, seed);
}

Mat Reconstructor::whiten(const Mat& frames) const {
  // Remove the cross-dim common signal (envelope), per-dim time means
  // (speaker), and overall scale (emotion); what is left is content only.
  int t_len = frames.rows, d = frames.cols;
  Mat r(t_len, d);
  for (int t = 0; t < t_len; ++t) {
    const double* row = frames.row(t);
    double c = 0.0;
    for (int j = 0; j < d; ++j) c += row[j];
    c /= d;
    for (int j = 0; j < d; ++j) r(t, j) = row[j] - c;
  }
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int t = 0; t < t_len; ++t) mean += r(t, j);
    mean /= t_len;
    for (int t = 0; t < t_len; ++t) r(t, j) -= mean;
  }
  double ss = 0.0;
  for (double v : r.d) ss += v * v;
  double scale = std::sqrt(ss / static_cast<double>(r.size())) + 1e-9;
  for (double& v : r.d) v /= scale;
  return r;
}

Mat Reconstructor::phase_features(const Mat& frames) const {
  // Unit-normalized sin/cos projections of the cross-dim mean signal at
  // each bank frequency: phase information without amplitude.
  int t_len = frames.rows, d = frames.cols;
  std::vector<double> c(t_len);
  double total = 0.0;
  for (int t = 0; t < t_len; ++t) {
    const double* row = frames.row(t);
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += row[j];
    c[t] = s / d;
    total += c[t];
  }
  double mean = total / t_len;
  Mat out(1, 2 * cfg_.fourier_bank);
  for (int k = 0; k < cfg_.fourier_bank; ++k) {
    double f = synth_style_freq(k);
    double w = kTwoPi * f / frame_rate_;
    double re = 0.0, im = 0.0;
    for (int t = 0; t < t_len; ++t) {
      double x = c[t] - mean;
      re += x * std::cos(w * t);
      im += x * std::sin(w * t);
    }
    double mag = std::sqrt(re * re + im * im) + 1e-9;
    out(0, 2 * k) = re / mag;
    out(0, 2 * k + 1) = im / mag;
  }
  return out;
}

Mat Reconstructor::fourier_positions(int t_len) const {
  Mat pos(t_len, 2 * cfg_.fourier_bank);
  for (int t = 0; t < t_len; ++t)
    for (int k = 0; k < cfg_.fourier_bank; ++k) {
      double w = kTwoPi * synth_style_freq(k) / frame_rate_;
      pos(t, 2 * k) = std::sin(w * t);
      pos(t, 2 * k + 1) = std::cos(w * t);
    }
  return pos;
}

int Reconstructor::content_node(PassCtx& ctx, const Mat& content_frames) const {
  Tape& t = *ctx.tape;
  int whitened = t.constant(whiten(content_frames));
  int h = t.tanh_op(cenc1_.forward(ctx, whitened));
  h = t.tanh_op(cenc2_.forward(ctx, h));
  int pooled = t.mean_rows(h);
  int phases = t.constant(phase_features(content_frames));
  int cat = t.concat_cols({pooled, phases});
  return t.tanh_op(content_proj_.forward(ctx, cat));
}

Reconstructor::ForwardNodes Reconstructor::forward(PassCtx& ctx,
                                                   const EmbeddingTriple& emb,
                                                   const Mat& content_frames) const {
  Tape& t = *ctx.tape;
  int t_len = content_frames.rows;
  int content = content_node(ctx, content_frames);
  int cond = t.concat_cols({t.constant(emb.style), t.constant(emb.emotion),
                            t.constant(emb.speaker), content});

  int gate = t.tanh_op(gate2_.forward(ctx, t.tanh_op(gate1_.forward(ctx, cond))));
  int pos = t.constant(fourier_positions(t_len));
  int modulated = t.mul_rowvec(pos, gate);

  // Broadcast cond over time via ones * cond.
  int ones = t.constant(Mat(t_len, 1, 1.0));
  int cond_rows = t.matmul(ones, cond);
  int dec_in = t.concat_cols({modulated, cond_rows});
  int h = t.tanh_op(dec1_.forward(ctx, dec_in));
  h = t.tanh_op(dec2_.forward(ctx, h));
  ForwardNodes out;
  out.mean = dec_out_.forward(ctx, h);
  out.mad = t.add_scalar(t.softplus(scale_head_.forward(ctx, cond)), 1e-6);
  return out;
}

Mat Reconstructor::content_code(const Mat& content_frames) const {
  Tape tape;
  PassCtx ctx;
  ctx.tape = &tape;
  ctx.freeze_params = true;
  return tape.val(content_node(ctx, content_frames));
}

Mat Reconstructor::predict_mean(const EmbeddingTriple& emb,
                                const Mat& content_frames,
                                double* predicted_mad) const {
  Tape tape;
  PassCtx ctx;
  ctx.tape = &tape;
  ctx.freeze_params = true;
  ForwardNodes n = forward(ctx, emb, content_frames);
  if (predicted_mad) *predicted_mad = tape.scalar(n.mad);
  return tape.val(n.mean);
}

Mat Reconstructor::generate(const EmbeddingTriple& emb, const Mat& content_frames,
                            uint64_t noise_seed) const {
  double mad = 0.0;
  Mat frames = predict_mean(emb, content_frames, &mad);
  double sigma = mad * kMadToSigma;
  Rng rng(mix_key(noise_seed, stream::kReconNoise));
  for (double& v : frames.d) v += sigma * rng.gaussian();
  return frames;
}

void Reconstructor::save(const std::string& path) const {
  nlohmann::ordered_json meta;
  meta["kind"] = "srl-reconstructor";
  meta["recon_config"] = cfg_.to_json();
  meta["d_emb"] = d_emb_;
  meta["frame_dim"] = frame_dim_;
  meta["frame_rate"] = frame_rate_;
  meta["slice_frames"] = slice_frames_;
  meta["trained"] = trained_;
  std::vector<std::pair<std::string, const Mat*>> tensors;
  for (const auto& p : store_.all()) {
    tensors.emplace_back(p->name, &p->value);
    tensors.emplace_back(p->name + "#adam_m", &p->m);
    tensors.emplace_back(p->name + "#adam_v", &p->v);
  }
  save_checkpoint(path, meta, tensors);
}

std::unique_ptr<Reconstructor> Reconstructor::load(const std::string& path) {
  CheckpointData ckpt = load_checkpoint(path);
  if (ckpt.meta.value("kind", "") != "srl-reconstructor")
    throw ParseError("checkpoint '" + path + "' is not a reconstructor");
  ReconConfig cfg = ReconConfig::from_json(ckpt.meta.at("recon_config"));
  auto r = std::make_unique<Reconstructor>(
      ckpt.meta.at("d_emb").get<int>(), ckpt.meta.at("frame_dim").get<int>(),
      ckpt.meta.at("frame_rate").get<double>(),
      ckpt.meta.at("slice_frames").get<int>(), cfg, 0);
  for (const auto& p : r->store_.all()) {
    p->value = ckpt.tensor(p->name);
    p->m = ckpt.tensor(p->name + "#adam_m");
    p->v = ckpt.tensor(p->name + "#adam_v");
  }
  r->trained_ = ckpt.meta.at("trained").get<bool>();
  return r;
}

namespace {

struct ReconSample {
  EmbeddingTriple emb;
  Mat frames;  // center slice, also the content input and target
};

std::vector<ReconSample> collect_samples(const SrlModel& srl,
                                         const CorpusManifest& manifest,
                                         const SamplerConfig& scfg,
                                         const std::vector<int>& indices) {
  std::vector<ReconSample> out;
  out.reserve(indices.size());
  for (int idx : indices) {
    const Utterance& u = manifest.entries[idx];
    SpeechSlice s = center_slice(u, scfg);
    ReconSample smp;
    smp.emb = srl.encode_triple(FrameFeatures{s.frames, {}});
    smp.frames = std::move(s.frames);
    out.push_back(std::move(smp));
  }
  return out;
}

double mean_mae(const Reconstructor& recon, const std::vector<ReconSample>& samples) {
  double acc = 0.0;
  for (const auto& s : samples) {
    Mat mean = recon.predict_mean(s.emb, s.frames, nullptr);
    acc += frames_mad(mean, s.frames);
  }
  return samples.empty() ? 0.0 : acc / samples.size();
}

}  // namespace

double reconstruction_mae(const SrlModel& srl, const CorpusManifest& manifest,
                          const SamplerConfig& scfg, const Reconstructor& recon,
                          const std::vector<int>& utt_indices) {
  auto samples = collect_samples(srl, manifest, scfg, utt_indices);
  return mean_mae(recon, samples);
}

ReconTrainReport train_reconstructor(const SrlModel& srl,
                                     const CorpusManifest& manifest,
                                     const SamplerConfig& scfg,
                                     Reconstructor& recon, uint64_t seed) {
  const ReconConfig& cfg = recon.config();
  int n = static_cast<int>(manifest.entries.size());
  if (n < 5) throw ValidationError("train_reconstructor: need at least 5 utterances");

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng split_rng(mix_key(seed, stream::kReconTrain, 0));
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(split_rng.uniform_int(0, i));
    std::swap(order[i], order[j]);
  }
  int n_hold = std::max(1, static_cast<int>(std::lround(cfg.holdout_fraction * n)));
  std::vector<int> hold(order.begin(), order.begin() + n_hold);
  std::vector<int> train(order.begin() + n_hold, order.end());

  auto train_samples = collect_samples(srl, manifest, scfg, train);
  auto hold_samples = collect_samples(srl, manifest, scfg, hold);

  ReconTrainReport report;
  report.untrained_holdout_mae = mean_mae(recon, hold_samples);
  report.steps = cfg.steps;

  Adam opt(cfg.learning_rate);
  int n_train = static_cast<int>(train_samples.size());
  for (int step = 1; step <= cfg.steps; ++step) {
    Tape tape;
    PassCtx ctx;
    ctx.tape = &tape;
    ctx.train = true;

    Rng pick(mix_key(seed, stream::kReconTrain, static_cast<uint64_t>(step)));
    std::vector<int> losses;
    int b = std::min(cfg.batch, n_train);
    for (int i = 0; i < b; ++i) {
      const ReconSample& s =
          train_samples[static_cast<size_t>(pick.uniform_int(0, n_train - 1))];
      Reconstructor::ForwardNodes f = recon.forward(ctx, s.emb, s.frames);
      int rec = mae_node(tape, f.mean, s.frames);
      // Scale target: residual MAD of the current (detached) mean.
      double resid = frames_mad(tape.val(f.mean), s.frames);
      int scale = abs_diff_scalar_node(tape, f.mad, resid);
      losses.push_back(tape.add(rec, tape.scale(scale, cfg.scale_loss_weight)));
    }
    int total = losses[0];
    for (size_t i = 1; i < losses.size(); ++i) total = tape.add(total, losses[i]);
    total = tape.scale(total, 1.0 / b);
    tape.backward(total);

    std::vector<std::pair<Param*, const Mat*>> grads;
    for (const auto& [param, node] : ctx.bound)
      grads.emplace_back(const_cast<Param*>(param), &tape.grad(node));
    std::sort(grads.begin(), grads.end(), [](const auto& a, const auto& b) {
      return a.first->name < b.first->name;
    });
    opt.step(grads, 5.0);
    if (step == cfg.steps) report.final_train_mae = tape.scalar(total);
  }

  if (cfg.steps > 0) recon.mark_trained();
  report.holdout_mae = mean_mae(recon, hold_samples);
  return report;
}

RecombineResult recombine(const SrlModel& srl, const Reconstructor& recon,
                          const Utterance& style_ref, const Utterance& emotion_ref,
                          const Utterance& speaker_ref, const Utterance& content_ref,
                          const SamplerConfig& scfg, const CategoryCounts& counts,
                          uint64_t noise_seed) {
  if (!recon.trained())
    throw ValidationError("recombine: reconstructor is untrained");
  auto embed_of = [&](const Utterance& u) {
    SpeechSlice s = center_slice(u, scfg);
    return srl.encode_triple(FrameFeatures{s.frames, {}});
  };
  EmbeddingTriple mixed;
  mixed.style = embed_of(style_ref).style;
  mixed.emotion = embed_of(emotion_ref).emotion;
  mixed.speaker = embed_of(speaker_ref).speaker;
  SpeechSlice content = center_slice(content_ref, scfg);

  RecombineResult r;
  double mad = 0.0;
  Mat mean = recon.predict_mean(mixed, content.frames, &mad);
  r.predicted_mad = mad;
  double sigma = mad * kMadToSigma;
  Rng rng(mix_key(noise_seed, stream::kReconNoise));
  r.frames = mean;
  for (double& v : r.frames.d) v += sigma * rng.gaussian();

  if (counts.style > 0)
    r.oracle_style = oracle_style(r.frames, scfg.frame_rate, counts.style);
  if (counts.emotion > 0) r.oracle_emotion = oracle_emotion(r.frames, counts.emotion);
  if (counts.speaker > 0) r.oracle_speaker = oracle_speaker(r.frames, counts.speaker);
  return r;
}

}  // namespace srl
