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

#ifndef SRL_CORPUS_HPP_
#define SRL_CORPUS_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "srl/common.hpp"

namespace srl {

enum class Domain { kStyle, kEmotion, kSpeaker, kUnlabeled };

const char* domain_name(Domain d);
Domain domain_from_name(const std::string& s);

enum class Attribute { kStyle, kEmotion, kSpeaker };
constexpr std::array<Attribute, 3> kAttributes = {
    Attribute::kStyle, Attribute::kEmotion, Attribute::kSpeaker};
const char* attribute_name(Attribute a);
Attribute attribute_from_name(const std::string& s);

// Optional categorical ids; absence is distinct from id 0.
struct AttributeLabels {
  std::optional<int> style;
  std::optional<int> emotion;
  std::optional<int> speaker;
  std::optional<int> language;

  std::optional<int> get(Attribute a) const;
  void set(Attribute a, std::optional<int> v);
  bool operator==(const AttributeLabels&) const = default;
};

// Deterministic synthetic signal recipe. Each factor occupies a disjoint,
// closed-form statistic of the generated frames:
//   speaker_id  -> per-dimension frame mean (row of a fixed seeded table)
//   emotion_id  -> scale of the white-noise residual
//   style_id    -> frequency of a sinusoidal envelope shared by all dims
//   content_seed-> the noise sequence and the envelope phase
// See synth_* helpers and the oracle_* functions below.
struct SyntheticFactorSpec {
  int style_id = 0;
  int emotion_id = 0;
  int speaker_id = 0;
  uint64_t content_seed = 0;
  double frame_rate = 50.0;
  int feature_dim = 16;
  double duration = 0.0;  // seconds

  bool operator==(const SyntheticFactorSpec&) const = default;
};

struct SignalSource {
  // Exactly one of the two is used.
  std::optional<SyntheticFactorSpec> synthetic;
  std::optional<std::string> frames_path;  // precomputed feature file
  bool operator==(const SignalSource&) const = default;
};

struct Utterance {
  std::string id;
  SignalSource source;
  double duration = 0.0;
  AttributeLabels labels;
  Domain domain = Domain::kUnlabeled;
  bool operator==(const Utterance&) const = default;
};

struct CategoryCounts {
  int style = 0;
  int emotion = 0;
  int speaker = 0;
  int language = 0;
  int get(Attribute a) const;
  bool operator==(const CategoryCounts&) const = default;
};

struct CorpusManifest {
  std::string version = "srl-manifest-1";
  CategoryCounts category_counts;
  std::vector<Utterance> entries;
  bool operator==(const CorpusManifest&) const = default;

  void validate() const;  // throws ValidationError naming the offending id
  const Utterance& by_id(const std::string& id) const;
  std::vector<int> indices_in_domain(Domain d) const;
};

struct SynthGenConfig {
  double frame_rate = 50.0;
  int feature_dim = 16;
  double dur_min = 4.0;   // seconds; quantized to whole frames
  double dur_max = 8.0;
};

// --- synthetic signal tables (fixed, manifest-independent) ---
double synth_style_freq(int style_id);       // Hz
double synth_emotion_sigma(int emotion_id);  // residual noise scale
double synth_speaker_mean(int speaker_id, int dim);
constexpr double kSynthStyleAmp = 1.0;
// Decision margins of the closed-form classifiers, used as transfer-test
// tolerances downstream.
constexpr double kSynthEmotionMargin = 0.075;  // half the sigma table gap

// --- operations ---

CorpusManifest load_manifest(const std::string& path);
void save_manifest(const CorpusManifest& m, const std::string& path);
std::string manifest_to_string(const CorpusManifest& m);
CorpusManifest manifest_from_string(const std::string& text);

CorpusManifest generate_synthetic_corpus(int n_styles, int n_emotions,
                                         int n_speakers, int n_utts_per_cell,
                                         uint64_t seed,
                                         const SynthGenConfig& cfg = {});

struct DomainFractions {
  double style = 0.25;
  double emotion = 0.25;
  double speaker = 0.25;
  double unlabeled = 0.25;
};

// Reassigns domains by exact floor/ceil quota and strips the labels each
// domain does not retain (STYLE keeps {style,speaker}, EMOTION keeps
// {emotion,speaker}, SPEAKER keeps {speaker}, UNLABELED keeps none).
CorpusManifest relabel_domains(const CorpusManifest& manifest,
                               const DomainFractions& fractions, uint64_t seed);

// Renders the [T x D] frame matrix for an utterance. Synthetic sources are
// pure functions of their spec.
Mat render_frames(const Utterance& utt);
Mat render_synthetic_frames(const SyntheticFactorSpec& spec);

// Frame files for file-backed utterances.
void save_frames_file(const Mat& frames, double frame_rate, const std::string& path);
Mat load_frames_file(const std::string& path, double* frame_rate = nullptr);

// --- closed-form factor oracles ---
// These recover the generating factor ids from frames (full utterances or
// slices) with 100% accuracy by construction; evaluation and transfer
// tests treat them as ground truth.
int oracle_speaker(const Mat& frames, int n_speakers);
int oracle_emotion(const Mat& frames, int n_emotions);
int oracle_style(const Mat& frames, double frame_rate, int n_styles);
double oracle_emotion_sigma(const Mat& frames);
double oracle_style_power(const Mat& frames, double frame_rate, double freq_hz);

}  // namespace srl

#endif  // SRL_CORPUS_HPP_
