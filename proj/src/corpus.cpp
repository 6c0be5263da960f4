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

#include "srl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "srl/rng.hpp"

namespace srl {

using ordered_json = nlohmann::ordered_json;

namespace {
// Master seed of the speaker mean table. A fixed constant (not the corpus
// seed) so the oracles need nothing beyond the frames themselves, and so
// speaker ids index one global identity space across corpora.
constexpr uint64_t kSpeakerTableSeed = 0x73706b5f7461626cULL;
constexpr double kSpeakerMeanScale = 1.5;
constexpr double kStyleBaseFreq = 2.0;   // Hz
constexpr double kStyleFreqStep = 2.5;   // Hz between adjacent style ids
constexpr double kEmotionSigmaStep = 0.15;
constexpr double kTwoPi = 6.283185307179586476925286766559;
}  // namespace

const char* domain_name(Domain d) {
  switch (d) {
    case Domain::kStyle: return "STYLE";
    case Domain::kEmotion: return "EMOTION";
    case Domain::kSpeaker: return "SPEAKER";
    case Domain::kUnlabeled: return "UNLABELED";
  }
  return "?";
}

Domain domain_from_name(const std::string& s) {
  if (s == "STYLE") return Domain::kStyle;
  if (s == "EMOTION") return Domain::kEmotion;
  if (s == "SPEAKER") return Domain::kSpeaker;
  if (s == "UNLABELED") return Domain::kUnlabeled;
  throw ParseError("unknown domain '" + s + "'");
}

const char* attribute_name(Attribute a) {
  switch (a) {
    case Attribute::kStyle: return "style";
    case Attribute::kEmotion: return "emotion";
    case Attribute::kSpeaker: return "speaker";
  }
  return "?";
}

Attribute attribute_from_name(const std::string& s) {
  if (s == "style") return Attribute::kStyle;
  if (s == "emotion") return Attribute::kEmotion;
  if (s == "speaker") return Attribute::kSpeaker;
  throw ParseError("unknown attribute '" + s + "'");
}

std::optional<int> AttributeLabels::get(Attribute a) const {
  switch (a) {
    case Attribute::kStyle: return style;
    case Attribute::kEmotion: return emotion;
    case Attribute::kSpeaker: return speaker;
  }
  return std::nullopt;
}

void AttributeLabels::set(Attribute a, std::optional<int> v) {
  switch (a) {
    case Attribute::kStyle: style = v; break;
    case Attribute::kEmotion: emotion = v; break;
    case Attribute::kSpeaker: speaker = v; break;
  }
}

int CategoryCounts::get(Attribute a) const {
  switch (a) {
    case Attribute::kStyle: return style;
    case Attribute::kEmotion: return emotion;
    case Attribute::kSpeaker: return speaker;
  }
  return 0;
}

void CorpusManifest::validate() const {
  std::unordered_set<std::string> seen;
  for (const Utterance& u : entries) {
    if (u.id.empty()) throw ValidationError("utterance with empty id");
    if (!seen.insert(u.id).second)
      throw ValidationError("duplicate utterance_id '" + u.id + "'");
    if (!(u.duration > 0.0))
      throw ValidationError("utterance '" + u.id + "': duration must be > 0");
    if (!u.source.synthetic && !u.source.frames_path)
      throw ValidationError("utterance '" + u.id + "': no signal source");

    auto check_label = [&](Attribute a, int count) {
      auto v = u.labels.get(a);
      if (v && (*v < 0 || *v >= count))
        throw ValidationError("utterance '" + u.id + "': " +
                              attribute_name(a) + " label " +
                              std::to_string(*v) + " outside category count " +
                              std::to_string(count));
    };
    check_label(Attribute::kStyle, category_counts.style);
    check_label(Attribute::kEmotion, category_counts.emotion);
    check_label(Attribute::kSpeaker, category_counts.speaker);
    if (u.labels.language &&
        (*u.labels.language < 0 || *u.labels.language >= category_counts.language))
      throw ValidationError("utterance '" + u.id + "': language label outside count");

    switch (u.domain) {
      case Domain::kStyle:
        if (!u.labels.style)
          throw ValidationError("utterance '" + u.id +
                                "': domain=STYLE but no style label");
        break;
      case Domain::kEmotion:
        if (!u.labels.emotion)
          throw ValidationError("utterance '" + u.id +
                                "': domain=EMOTION but no emotion label");
        break;
      case Domain::kSpeaker:
        if (!u.labels.speaker)
          throw ValidationError("utterance '" + u.id +
                                "': domain=SPEAKER but no speaker label");
        break;
      case Domain::kUnlabeled:
        if (u.labels.style || u.labels.emotion || u.labels.speaker)
          throw ValidationError("utterance '" + u.id +
                                "': domain=UNLABELED must carry no attribute labels");
        break;
    }
  }
}

const Utterance& CorpusManifest::by_id(const std::string& id) const {
  for (const Utterance& u : entries)
    if (u.id == id) return u;
  throw ValidationError("utterance '" + id + "' not in manifest");
}

std::vector<int> CorpusManifest::indices_in_domain(Domain d) const {
  std::vector<int> out;
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].domain == d) out.push_back(static_cast<int>(i));
  return out;
}

// --- synthetic tables ---

double synth_style_freq(int style_id) {
  return kStyleBaseFreq + kStyleFreqStep * style_id;
}

double synth_emotion_sigma(int emotion_id) {
  return kEmotionSigmaStep * (1 + emotion_id);
}

double synth_speaker_mean(int speaker_id, int dim) {
  Rng rng(mix_key(kSpeakerTableSeed, static_cast<uint64_t>(speaker_id),
                  static_cast<uint64_t>(dim)));
  return kSpeakerMeanScale * rng.gaussian();
}

// --- serialization ---

namespace {

ordered_json labels_to_json(const AttributeLabels& l) {
  ordered_json j = ordered_json::object();
  if (l.style) j["style"] = *l.style;
  if (l.emotion) j["emotion"] = *l.emotion;
  if (l.speaker) j["speaker"] = *l.speaker;
  if (l.language) j["language"] = *l.language;
  return j;
}

AttributeLabels labels_from_json(const ordered_json& j, int line) {
  AttributeLabels l;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "style") l.style = it.value().get<int>();
    else if (k == "emotion") l.emotion = it.value().get<int>();
    else if (k == "speaker") l.speaker = it.value().get<int>();
    else if (k == "language") l.language = it.value().get<int>();
    else warn("manifest line " + std::to_string(line) + ": unknown label field '" + k + "' ignored");
  }
  return l;
}

ordered_json utterance_to_json(const Utterance& u) {
  ordered_json j = ordered_json::object();
  j["record"] = "utterance";
  j["id"] = u.id;
  j["duration"] = u.duration;
  j["domain"] = domain_name(u.domain);
  j["labels"] = labels_to_json(u.labels);
  ordered_json src = ordered_json::object();
  if (u.source.synthetic) {
    const SyntheticFactorSpec& s = *u.source.synthetic;
    src["type"] = "synthetic";
    src["style_id"] = s.style_id;
    src["emotion_id"] = s.emotion_id;
    src["speaker_id"] = s.speaker_id;
    src["content_seed"] = s.content_seed;
    src["frame_rate"] = s.frame_rate;
    src["feature_dim"] = s.feature_dim;
    src["duration"] = s.duration;
  } else {
    src["type"] = "frames_file";
    src["path"] = *u.source.frames_path;
  }
  j["source"] = src;
  return j;
}

Utterance utterance_from_json(const ordered_json& j, int line) {
  Utterance u;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "record") continue;
    else if (k == "id") u.id = it.value().get<std::string>();
    else if (k == "duration") u.duration = it.value().get<double>();
    else if (k == "domain") u.domain = domain_from_name(it.value().get<std::string>());
    else if (k == "labels") u.labels = labels_from_json(it.value(), line);
    else if (k == "source") {
      const ordered_json& src = it.value();
      std::string type = src.at("type").get<std::string>();
      if (type == "synthetic") {
        SyntheticFactorSpec s;
        s.style_id = src.at("style_id").get<int>();
        s.emotion_id = src.at("emotion_id").get<int>();
        s.speaker_id = src.at("speaker_id").get<int>();
        s.content_seed = src.at("content_seed").get<uint64_t>();
        s.frame_rate = src.at("frame_rate").get<double>();
        s.feature_dim = src.at("feature_dim").get<int>();
        s.duration = src.at("duration").get<double>();
        u.source.synthetic = s;
      } else if (type == "frames_file") {
        u.source.frames_path = src.at("path").get<std::string>();
      } else {
        throw ParseError("line " + std::to_string(line) + ": unknown source type '" + type + "'");
      }
    } else {
      warn("manifest line " + std::to_string(line) + ": unknown field '" + k + "' ignored");
    }
  }
  return u;
}

}  // namespace

std::string manifest_to_string(const CorpusManifest& m) {
  std::ostringstream out;
  ordered_json header = ordered_json::object();
  header["record"] = "manifest_header";
  header["version"] = m.version;
  header["category_counts"] = {{"style", m.category_counts.style},
                               {"emotion", m.category_counts.emotion},
                               {"speaker", m.category_counts.speaker},
                               {"language", m.category_counts.language}};
  out << header.dump() << "\n";
  for (const Utterance& u : m.entries) out << utterance_to_json(u).dump() << "\n";
  return out.str();
}

CorpusManifest manifest_from_string(const std::string& text) {
  CorpusManifest m;
  std::istringstream in(text);
  std::string linebuf;
  int line = 0;
  bool have_header = false;
  while (std::getline(in, linebuf)) {
    ++line;
    if (linebuf.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(linebuf);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("manifest parse error at line " + std::to_string(line) +
                       ": " + e.what());
    }
    std::string record = j.value("record", "");
    if (record == "manifest_header") {
      if (have_header)
        throw ParseError("manifest line " + std::to_string(line) + ": duplicate header");
      have_header = true;
      m.version = j.at("version").get<std::string>();
      const auto& cc = j.at("category_counts");
      m.category_counts.style = cc.value("style", 0);
      m.category_counts.emotion = cc.value("emotion", 0);
      m.category_counts.speaker = cc.value("speaker", 0);
      m.category_counts.language = cc.value("language", 0);
    } else if (record == "utterance") {
      try {
        m.entries.push_back(utterance_from_json(j, line));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest parse error at line " + std::to_string(line) +
                         ": " + e.what());
      }
    } else {
      throw ParseError("manifest line " + std::to_string(line) +
                       ": unknown record type '" + record + "'");
    }
  }
  if (!have_header) throw ParseError("manifest has no header record");
  m.validate();
  return m;
}

CorpusManifest load_manifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open manifest '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return manifest_from_string(ss.str());
}

void save_manifest(const CorpusManifest& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write manifest '" + path + "'");
  f << manifest_to_string(m);
}

CorpusManifest generate_synthetic_corpus(int n_styles, int n_emotions,
                                         int n_speakers, int n_utts_per_cell,
                                         uint64_t seed,
                                         const SynthGenConfig& cfg) {
  if (n_styles < 1 || n_emotions < 1 || n_speakers < 1 || n_utts_per_cell < 1)
    throw ConfigError("generate_synthetic_corpus: all counts must be >= 1");
  double nyquist = cfg.frame_rate / 2.0;
  if (synth_style_freq(n_styles - 1) >= 0.9 * nyquist)
    throw ConfigError("generate_synthetic_corpus: style frequency table exceeds "
                      "0.9*Nyquist at this frame rate; lower n_styles or raise frame_rate");

  CorpusManifest m;
  m.category_counts.style = n_styles;
  m.category_counts.emotion = n_emotions;
  m.category_counts.speaker = n_speakers;
  m.category_counts.language = 0;

  int t_min = static_cast<int>(std::lround(cfg.dur_min * cfg.frame_rate));
  int t_max = static_cast<int>(std::lround(cfg.dur_max * cfg.frame_rate));
  if (t_min < 1 || t_max < t_min)
    throw ConfigError("generate_synthetic_corpus: bad duration range");

  int index = 0;
  for (int st = 0; st < n_styles; ++st)
    for (int em = 0; em < n_emotions; ++em)
      for (int sp = 0; sp < n_speakers; ++sp)
        for (int i = 0; i < n_utts_per_cell; ++i, ++index) {
          Utterance u;
          char buf[32];
          std::snprintf(buf, sizeof(buf), "u%05d", index);
          u.id = buf;
          Rng dur_rng(mix_key(seed, stream::kSynthDuration, static_cast<uint64_t>(index)));
          int frames = static_cast<int>(dur_rng.uniform_int(t_min, t_max));
          SyntheticFactorSpec spec;
          spec.style_id = st;
          spec.emotion_id = em;
          spec.speaker_id = sp;
          spec.content_seed = mix_key(seed, stream::kSynthContent, static_cast<uint64_t>(index));
          spec.frame_rate = cfg.frame_rate;
          spec.feature_dim = cfg.feature_dim;
          spec.duration = frames / cfg.frame_rate;
          u.source.synthetic = spec;
          u.duration = spec.duration;
          u.labels.style = st;
          u.labels.emotion = em;
          u.labels.speaker = sp;
          // Freshly generated corpora are fully labeled; relabel_domains is
          // the step that assigns the semi-supervised domain split.
          u.domain = Domain::kStyle;
          m.entries.push_back(std::move(u));
        }
  m.validate();
  return m;
}

CorpusManifest relabel_domains(const CorpusManifest& manifest,
                               const DomainFractions& fractions, uint64_t seed) {
  if (manifest.entries.empty())
    throw ValidationError("relabel_domains: empty manifest");
  double sum = fractions.style + fractions.emotion + fractions.speaker +
               fractions.unlabeled;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("relabel_domains: fractions must sum to 1 (got " +
                      format_g17(sum) + ")");

  int n = static_cast<int>(manifest.entries.size());
  std::array<double, 4> f = {fractions.style, fractions.emotion,
                             fractions.speaker, fractions.unlabeled};
  std::array<int, 4> quota;
  std::array<double, 4> frac_part;
  int assigned = 0;
  for (int i = 0; i < 4; ++i) {
    double exact = f[i] * n;
    quota[i] = static_cast<int>(std::floor(exact + 1e-12));
    frac_part[i] = exact - quota[i];
    assigned += quota[i];
  }
  // Distribute remainder by largest fractional part, ties by domain order.
  for (int r = assigned; r < n; ++r) {
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (frac_part[i] > frac_part[best] + 1e-12) best = i;
    quota[best] += 1;
    frac_part[best] = -1.0;
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_key(seed, stream::kRelabel));
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(order[i], order[j]);
  }

  CorpusManifest out = manifest;
  static constexpr std::array<Domain, 4> kOrder = {
      Domain::kStyle, Domain::kEmotion, Domain::kSpeaker, Domain::kUnlabeled};
  int pos = 0;
  for (int di = 0; di < 4; ++di) {
    for (int c = 0; c < quota[di]; ++c, ++pos) {
      Utterance& u = out.entries[order[pos]];
      u.domain = kOrder[di];
      AttributeLabels kept;
      kept.language = u.labels.language;
      switch (kOrder[di]) {
        case Domain::kStyle:
          kept.style = u.labels.style;
          kept.speaker = u.labels.speaker;
          break;
        case Domain::kEmotion:
          kept.emotion = u.labels.emotion;
          kept.speaker = u.labels.speaker;
          break;
        case Domain::kSpeaker:
          kept.speaker = u.labels.speaker;
          break;
        case Domain::kUnlabeled:
          break;
      }
      u.labels = kept;
    }
  }
  out.validate();
  return out;
}

Mat render_synthetic_frames(const SyntheticFactorSpec& spec) {
  int t_len = static_cast<int>(std::lround(spec.duration * spec.frame_rate));
  if (t_len < 1) throw ValidationError("render_synthetic_frames: empty signal");
  int d = spec.feature_dim;
  double sigma = synth_emotion_sigma(spec.emotion_id);
  double freq = synth_style_freq(spec.style_id);
  Rng rng(mix_key(spec.content_seed, stream::kSynthContent));
  double phase = rng.uniform(0.0, kTwoPi);
  Mat frames(t_len, d);
  for (int t = 0; t < t_len; ++t) {
    double envelope =
        kSynthStyleAmp * std::sin(kTwoPi * freq * t / spec.frame_rate + phase);
    double* row = frames.row(t);
    for (int j = 0; j < d; ++j)
      row[j] = synth_speaker_mean(spec.speaker_id, j) + sigma * rng.gaussian() +
               envelope;
  }
  return frames;
}

Mat render_frames(const Utterance& utt) {
  if (utt.source.synthetic) return render_synthetic_frames(*utt.source.synthetic);
  if (utt.source.frames_path) return load_frames_file(*utt.source.frames_path);
  throw ValidationError("utterance '" + utt.id + "': unresolvable signal source");
}

// Frame file format: "SRLFRAME" magic, int32 rows/cols, float64 frame_rate,
// then row-major little-endian doubles.
void save_frames_file(const Mat& frames, double frame_rate, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write frames file '" + path + "'");
  f.write("SRLFRAME", 8);
  int32_t r = frames.rows, c = frames.cols;
  f.write(reinterpret_cast<const char*>(&r), 4);
  f.write(reinterpret_cast<const char*>(&c), 4);
  f.write(reinterpret_cast<const char*>(&frame_rate), 8);
  f.write(reinterpret_cast<const char*>(frames.d.data()),
          static_cast<std::streamsize>(frames.size() * sizeof(double)));
}

Mat load_frames_file(const std::string& path, double* frame_rate) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("unresolvable frames file '" + path + "'");
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != "SRLFRAME")
    throw ParseError("bad frames file magic in '" + path + "'");
  int32_t r = 0, c = 0;
  double fr = 0.0;
  f.read(reinterpret_cast<char*>(&r), 4);
  f.read(reinterpret_cast<char*>(&c), 4);
  f.read(reinterpret_cast<char*>(&fr), 8);
  if (!f || r < 1 || c < 1) throw ParseError("bad frames file header in '" + path + "'");
  Mat frames(r, c);
  f.read(reinterpret_cast<char*>(frames.d.data()),
         static_cast<std::streamsize>(frames.size() * sizeof(double)));
  if (!f) throw ParseError("truncated frames file '" + path + "'");
  if (frame_rate) *frame_rate = fr;
  return frames;
}

// --- oracles ---

int oracle_speaker(const Mat& frames, int n_speakers) {
  int d = frames.cols;
  std::vector<double> mean(d, 0.0);
  for (int t = 0; t < frames.rows; ++t) {
    const double* row = frames.row(t);
    for (int j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (int j = 0; j < d; ++j) mean[j] /= frames.rows;
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_speakers; ++s) {
    double dist = 0.0;
    for (int j = 0; j < d; ++j) {
      double diff = mean[j] - synth_speaker_mean(s, j);
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = s;
    }
  }
  return best;
}

double oracle_emotion_sigma(const Mat& frames) {
  // Removing the per-frame cross-dimension mean cancels the style envelope
  // exactly (it is common to all dims); removing the per-dim time mean then
  // cancels the speaker offset. What is left is the scaled white noise.
  int t_len = frames.rows, d = frames.cols;
  if (t_len < 2 || d < 2)
    throw ValidationError("oracle_emotion_sigma: need at least 2 frames and 2 dims");
  Mat r(t_len, d);
  for (int t = 0; t < t_len; ++t) {
    const double* row = frames.row(t);
    double c = 0.0;
    for (int j = 0; j < d; ++j) c += row[j];
    c /= d;
    for (int j = 0; j < d; ++j) r(t, j) = row[j] - c;
  }
  double ss = 0.0;
  for (int j = 0; j < d; ++j) {
    double mean = 0.0;
    for (int t = 0; t < t_len; ++t) mean += r(t, j);
    mean /= t_len;
    for (int t = 0; t < t_len; ++t) {
      double e = r(t, j) - mean;
      ss += e * e;
    }
  }
  return std::sqrt(ss / (static_cast<double>(t_len - 1) * (d - 1)));
}

int oracle_emotion(const Mat& frames, int n_emotions) {
  double sigma = oracle_emotion_sigma(frames);
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int e = 0; e < n_emotions; ++e) {
    double dist = std::abs(sigma - synth_emotion_sigma(e));
    if (dist < best_dist) {
      best_dist = dist;
      best = e;
    }
  }
  return best;
}

double oracle_style_power(const Mat& frames, double frame_rate, double freq_hz) {
  // Goertzel-style projection of the cross-dimension mean signal.
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
  double re = 0.0, im = 0.0;
  double w = kTwoPi * freq_hz / frame_rate;
  for (int t = 0; t < t_len; ++t) {
    double x = c[t] - mean;
    re += x * std::cos(w * t);
    im += x * std::sin(w * t);
  }
  return (re * re + im * im) / t_len;
}

int oracle_style(const Mat& frames, double frame_rate, int n_styles) {
  int best = 0;
  double best_power = -1.0;
  for (int s = 0; s < n_styles; ++s) {
    double p = oracle_style_power(frames, frame_rate, synth_style_freq(s));
    if (p > best_power) {
      best_power = p;
      best = s;
    }
  }
  return best;
}

}  // namespace srl
