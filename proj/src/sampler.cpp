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

#include "srl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "srl/rng.hpp"

namespace srl {

int SamplerConfig::slice_frames() const {
  double exact = slice_seconds * frame_rate;
  double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9 || rounded < 1.0)
    throw ConfigError("slice_seconds * frame_rate must be a positive whole "
                      "frame count (got " + format_g17(exact) + ")");
  return static_cast<int>(rounded);
}

namespace {

SpeechSlice slice_common(const Utterance& utt, const Mat& frames,
                         uint64_t offset_seed, const SamplerConfig& cfg) {
  int t_total = frames.rows;
  int t_s = cfg.slice_frames();
  if (t_total < 1) throw ValidationError("extract_slice: zero-duration utterance '" + utt.id + "'");

  SpeechSlice s;
  s.parent_id = utt.id;
  s.labels = utt.labels;
  s.domain = utt.domain;
  s.frames = Mat(t_s, frames.cols);

  if (t_total >= t_s) {
    Rng rng(mix_key(offset_seed, stream::kSliceOffset));
    int start = static_cast<int>(rng.uniform_int(0, t_total - t_s));
    s.start = start / cfg.frame_rate;
    for (int t = 0; t < t_s; ++t)
      std::copy(frames.row(start + t), frames.row(start + t) + frames.cols,
                s.frames.row(t));
  } else {
    // Repeat along the time axis until long enough, then cut from 0.
    s.start = 0.0;
    for (int t = 0; t < t_s; ++t) {
      int src = t % t_total;
      std::copy(frames.row(src), frames.row(src) + frames.cols, s.frames.row(t));
    }
  }
  return s;
}

}  // namespace

SpeechSlice extract_slice(const Utterance& utt, uint64_t offset_seed,
                          const SamplerConfig& cfg) {
  Mat frames = render_frames(utt);
  return slice_common(utt, frames, offset_seed, cfg);
}

SpeechSlice extract_slice_from_frames(const Utterance& utt, const Mat& frames,
                                      uint64_t offset_seed,
                                      const SamplerConfig& cfg) {
  return slice_common(utt, frames, offset_seed, cfg);
}

SpeechSlice center_slice(const Utterance& utt, const SamplerConfig& cfg) {
  Mat frames = render_frames(utt);
  int t_total = frames.rows;
  int t_s = cfg.slice_frames();
  SpeechSlice s;
  s.parent_id = utt.id;
  s.labels = utt.labels;
  s.domain = utt.domain;
  s.frames = Mat(t_s, frames.cols);
  if (t_total >= t_s) {
    int start = (t_total - t_s) / 2;
    s.start = start / cfg.frame_rate;
    for (int t = 0; t < t_s; ++t)
      std::copy(frames.row(start + t), frames.row(start + t) + frames.cols,
                s.frames.row(t));
  } else {
    s.start = 0.0;
    for (int t = 0; t < t_s; ++t) {
      int src = t % t_total;
      std::copy(frames.row(src), frames.row(src) + frames.cols, s.frames.row(t));
    }
  }
  return s;
}

PairBatch compose_batch(const CorpusManifest& manifest, int k, uint64_t seed,
                        const SamplerConfig& cfg) {
  if (k < 4 || k % 4 != 0)
    throw ConfigError("compose_batch: K must be a positive multiple of 4 (got " +
                      std::to_string(k) + ")");
  int per_domain = k / 4;
  static constexpr std::array<Domain, 4> kOrder = {
      Domain::kStyle, Domain::kEmotion, Domain::kSpeaker, Domain::kUnlabeled};

  PairBatch batch;
  batch.set_a.reserve(k);
  batch.set_b.reserve(k);
  for (int di = 0; di < 4; ++di) {
    Domain d = kOrder[di];
    std::vector<int> pool = manifest.indices_in_domain(d);
    if (static_cast<int>(pool.size()) < per_domain)
      throw ValidationError(std::string("compose_batch: insufficient utterances in domain ") +
                            domain_name(d) + " (" + std::to_string(pool.size()) +
                            " < " + std::to_string(per_domain) + ")");
    // Seeded permutation per domain; first per_domain entries win, so no
    // utterance repeats within a quarter.
    Rng rng(mix_key(seed, stream::kBatchCompose, static_cast<uint64_t>(di)));
    for (int i = static_cast<int>(pool.size()) - 1; i > 0; --i) {
      int j = static_cast<int>(rng.uniform_int(0, i));
      std::swap(pool[i], pool[j]);
    }
    for (int i = 0; i < per_domain; ++i) {
      const Utterance& u = manifest.entries[pool[i]];
      Mat frames = render_frames(u);
      int pos = di * per_domain + i;
      batch.set_a.push_back(extract_slice_from_frames(
          u, frames, mix_key(seed, 0xa, static_cast<uint64_t>(pos)), cfg));
      batch.set_b.push_back(extract_slice_from_frames(
          u, frames, mix_key(seed, 0xb, static_cast<uint64_t>(pos)), cfg));
    }
  }
  return batch;
}

MaskMatrix build_mask(const PairBatch& batch, Attribute attribute,
                      const SamplerConfig& cfg) {
  int k = batch.k();
  MaskMatrix m;
  m.attribute = attribute;
  m.k = k;
  m.entries.assign(static_cast<size_t>(k) * k, -1);
  for (int i = 0; i < k; ++i) {
    const SpeechSlice& a = batch.set_a[i];
    for (int j = 0; j < k; ++j) {
      if (i == j) {
        m.at(i, j) = 1;  // two slices of the same utterance
        continue;
      }
      const SpeechSlice& b = batch.set_b[j];
      auto la = a.labels.get(attribute);
      auto lb = b.labels.get(attribute);
      if (!la || !lb) continue;  // unknown stays -1
      if (attribute == Attribute::kSpeaker && !cfg.speaker_ids_global &&
          a.domain != b.domain)
        continue;  // identity spaces may collide across corpora
      m.at(i, j) = (*la == *lb) ? 1 : 0;
    }
  }
  return m;
}

std::string MaskMatrix::to_grid_string() const {
  std::ostringstream out;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (j) out << ' ';
      out << static_cast<int>(at(i, j));
    }
    out << '\n';
  }
  return out.str();
}

MaskMatrix MaskMatrix::from_grid_string(Attribute a, const std::string& text) {
  MaskMatrix m;
  m.attribute = a;
  std::istringstream in(text);
  std::string line;
  std::vector<int8_t> vals;
  int rows = 0, cols = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int v, c = 0;
    while (ls >> v) {
      if (v < -1 || v > 1) throw ParseError("mask grid entry out of range");
      vals.push_back(static_cast<int8_t>(v));
      ++c;
    }
    if (cols < 0) cols = c;
    else if (c != cols) throw ParseError("mask grid is ragged");
    ++rows;
  }
  if (rows != cols) throw ParseError("mask grid is not square");
  m.k = rows;
  m.entries = std::move(vals);
  return m;
}

BatchStatistics batch_statistics(const PairBatch& batch) {
  BatchStatistics st;
  int k = batch.k();
  for (const char* d : {"STYLE", "EMOTION", "SPEAKER", "UNLABELED"})
    st.domain_counts[d] = 0;
  for (const SpeechSlice& s : batch.set_a)
    st.domain_counts[domain_name(s.domain)] += 1;

  for (Attribute a : kAttributes) {
    auto& hist = st.label_histograms[attribute_name(a)];
    for (const auto* set : {&batch.set_a, &batch.set_b})
      for (const SpeechSlice& s : *set)
        if (auto v = s.labels.get(a)) hist[*v] += 1;
  }

  st.quota_ok = (k % 4 == 0) && k > 0;
  if (st.quota_ok) {
    int q = k / 4;
    static constexpr std::array<Domain, 4> kOrder = {
        Domain::kStyle, Domain::kEmotion, Domain::kSpeaker, Domain::kUnlabeled};
    for (int i = 0; i < k && st.quota_ok; ++i) {
      Domain expect = kOrder[i / q];
      if (batch.set_a[i].domain != expect || batch.set_b[i].domain != expect)
        st.quota_ok = false;
      if (batch.set_a[i].parent_id != batch.set_b[i].parent_id)
        st.quota_ok = false;
    }
  }
  return st;
}

}  // namespace srl
