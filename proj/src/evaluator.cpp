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

#include "srl/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "srl/kernels.hpp"

namespace srl {

EmbedTable embed_corpus(const SrlModel& model, const CorpusManifest& manifest,
                        const SamplerConfig& cfg) {
  EmbedTable table;
  table.reserve(manifest.entries.size());
  for (const Utterance& u : manifest.entries) {
    SpeechSlice s = center_slice(u, cfg);
    FrameFeatures f{s.frames, {}};
    EmbeddedUtterance row;
    row.id = u.id;
    row.emb = model.encode_triple(f);
    row.labels = u.labels;
    row.domain = u.domain;
    table.push_back(std::move(row));
  }
  return table;
}

Mat stack_embeddings(const EmbedTable& table, Attribute space) {
  if (table.empty()) throw ValidationError("stack_embeddings: empty table");
  int d = table[0].emb.get(space).cols;
  Mat out(static_cast<int>(table.size()), d);
  for (size_t i = 0; i < table.size(); ++i) {
    const Mat& e = table[i].emb.get(space);
    std::copy(e.d.begin(), e.d.end(), out.row(static_cast<int>(i)));
  }
  return out;
}

std::vector<int> table_labels(const EmbedTable& table, Attribute a) {
  std::vector<int> out;
  out.reserve(table.size());
  for (const auto& row : table) {
    auto v = row.labels.get(a);
    if (!v)
      throw ValidationError("table_labels: utterance '" + row.id +
                            "' lacks a " + attribute_name(a) + " label");
    out.push_back(*v);
  }
  return out;
}

void save_embed_table(const EmbedTable& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write embeddings '" + path + "'");
  for (const auto& row : table) {
    nlohmann::ordered_json j;
    j["id"] = row.id;
    nlohmann::ordered_json labels = nlohmann::ordered_json::object();
    if (row.labels.style) labels["style"] = *row.labels.style;
    if (row.labels.emotion) labels["emotion"] = *row.labels.emotion;
    if (row.labels.speaker) labels["speaker"] = *row.labels.speaker;
    if (row.labels.language) labels["language"] = *row.labels.language;
    j["labels"] = labels;
    j["domain"] = domain_name(row.domain);
    for (Attribute a : kAttributes) {
      const Mat& e = row.emb.get(a);
      j[attribute_name(a)] = std::vector<double>(e.d.begin(), e.d.end());
    }
    f << j.dump() << "\n";
  }
}

nlohmann::ordered_json ProbeReport::to_json() const {
  nlohmann::ordered_json j;
  j["probe_target"] = probe_target;
  j["probe_source"] = probe_source;
  j["accuracy"] = accuracy;
  j["chance_level"] = chance_level;
  j["n_test"] = n_test;
  return j;
}

ProbeReport linear_probe(const Mat& features, const std::vector<int>& labels,
                         const std::string& target_name,
                         const std::string& source_name, uint64_t seed,
                         const ProbeConfig& cfg) {
  int n = features.rows;
  if (n != static_cast<int>(labels.size()))
    throw ValidationError("linear_probe: features/labels size mismatch");
  if (n < 5) throw ValidationError("linear_probe: need at least 5 rows");

  int n_classes = 0;
  std::map<int, int> counts;
  for (int y : labels) {
    if (y < 0) throw ValidationError("linear_probe: negative label");
    counts[y] += 1;
    n_classes = std::max(n_classes, y + 1);
  }
  if (counts.size() < 2)
    throw ValidationError("linear_probe: single-class labels (degenerate)");

  int majority = 0;
  for (const auto& [y, c] : counts) majority = std::max(majority, c);
  double chance = static_cast<double>(majority) / n;

  // Seeded split by utterance row.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_key(seed, stream::kProbeSplit));
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(order[i], order[j]);
  }
  int n_train = static_cast<int>(std::lround(cfg.train_fraction * n));
  n_train = std::clamp(n_train, 1, n - 1);
  int n_test = n - n_train;

  int d = features.cols;
  Mat xtr(n_train, d), xte(n_test, d);
  std::vector<int> ytr(n_train), yte(n_test);
  for (int i = 0; i < n_train; ++i) {
    std::copy(features.row(order[i]), features.row(order[i]) + d, xtr.row(i));
    ytr[i] = labels[order[i]];
  }
  for (int i = 0; i < n_test; ++i) {
    std::copy(features.row(order[n_train + i]), features.row(order[n_train + i]) + d,
              xte.row(i));
    yte[i] = labels[order[n_train + i]];
  }

  // Full-batch softmax regression, zero init (convex: deterministic).
  Mat w(d, n_classes), b(1, n_classes);
  Mat mw(d, n_classes), vw(d, n_classes), mb(1, n_classes), vb(1, n_classes);
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  for (int it = 1; it <= cfg.iters; ++it) {
    Mat logits = kernels::matmul(xtr, false, w, false);
    for (int i = 0; i < n_train; ++i)
      for (int c = 0; c < n_classes; ++c) logits(i, c) += b(0, c);
    Mat probs = kernels::softmax_rows(logits);
    for (int i = 0; i < n_train; ++i) probs(i, ytr[i]) -= 1.0;
    for (double& x : probs.d) x /= n_train;
    Mat gw = kernels::matmul(xtr, true, probs, false);
    for (size_t i = 0; i < gw.size(); ++i) gw.d[i] += cfg.weight_decay * w.d[i];
    Mat gb(1, n_classes);
    for (int i = 0; i < n_train; ++i)
      for (int c = 0; c < n_classes; ++c) gb(0, c) += probs(i, c);

    double bc1 = 1.0 - std::pow(beta1, it);
    double bc2 = 1.0 - std::pow(beta2, it);
    auto adam = [&](Mat& p, Mat& m, Mat& v, const Mat& g) {
      for (size_t i = 0; i < p.size(); ++i) {
        m.d[i] = beta1 * m.d[i] + (1 - beta1) * g.d[i];
        v.d[i] = beta2 * v.d[i] + (1 - beta2) * g.d[i] * g.d[i];
        p.d[i] -= cfg.lr * (m.d[i] / bc1) / (std::sqrt(v.d[i] / bc2) + eps);
      }
    };
    adam(w, mw, vw, gw);
    adam(b, mb, vb, gb);
  }

  int correct = 0;
  for (int i = 0; i < n_test; ++i) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < n_classes; ++c) {
      double score = b(0, c);
      for (int j = 0; j < d; ++j) score += xte(i, j) * w(j, c);
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    if (best == yte[i]) ++correct;
  }

  ProbeReport r;
  r.probe_target = target_name;
  r.probe_source = source_name;
  r.accuracy = static_cast<double>(correct) / n_test;
  r.chance_level = chance;
  r.n_test = n_test;
  return r;
}

namespace {

double cosine_distance(const double* a, const double* b, int d) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int j = 0; j < d; ++j) {
    dot += a[j] * b[j];
    na += a[j] * a[j];
    nb += b[j] * b[j];
  }
  double denom = std::sqrt(na) * std::sqrt(nb);
  if (denom < 1e-300) throw NumericError("cosine_distance: zero-norm vector");
  return 1.0 - dot / denom;
}

}  // namespace

ClusterMetrics clustering_metrics(const Mat& features,
                                  const std::vector<int>& labels, uint64_t seed) {
  int n = features.rows, d = features.cols;
  if (n != static_cast<int>(labels.size()))
    throw ValidationError("clustering_metrics: size mismatch");
  std::map<int, int> counts;
  for (int y : labels) counts[y] += 1;
  if (counts.size() < 2)
    throw ValidationError("clustering_metrics: need at least 2 classes");
  for (const auto& [y, c] : counts)
    if (c < 2)
      throw ValidationError("clustering_metrics: class " + std::to_string(y) +
                            " has fewer than 2 points");
  // Degenerate geometry check: all points identical.
  bool any_var = false;
  for (int i = 1; i < n && !any_var; ++i)
    for (int j = 0; j < d; ++j)
      if (features(i, j) != features(0, j)) {
        any_var = true;
        break;
      }
  if (!any_var)
    throw ValidationError("clustering_metrics: zero variance (all points identical)");

  // Pairwise cosine distances.
  Mat dist(n, n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      dist(i, j) = i == j ? 0.0 : cosine_distance(features.row(i), features.row(j), d);

  // Silhouette over the provided labels.
  double sil_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    std::map<int, std::pair<double, int>> per_class;  // label -> (sum, count)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& pc = per_class[labels[j]];
      pc.first += dist(i, j);
      pc.second += 1;
    }
    double a = 0.0;
    bool own_ok = false;
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [y, sc] : per_class) {
      double mean = sc.first / sc.second;
      if (y == labels[i]) {
        a = mean;
        own_ok = true;
      } else {
        b = std::min(b, mean);
      }
    }
    if (!own_ok) continue;  // singleton after exclusion; guarded above
    double s = (b - a) / std::max(a, b);
    sil_sum += s;
  }

  // Seeded k-means (k = #classes) on the raw features, then best-match purity.
  int k = static_cast<int>(counts.size());
  Rng rng(mix_key(seed, stream::kKmeans));
  std::vector<int> centers;
  centers.push_back(static_cast<int>(rng.uniform_int(0, n - 1)));
  std::vector<double> min_d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c : centers) {
        double d2 = 0.0;
        for (int j = 0; j < d; ++j) {
          double diff = features(i, j) - features(c, j);
          d2 += diff * diff;
        }
        best = std::min(best, d2);
      }
      min_d2[i] = best;
      total += best;
    }
    double r = rng.uniform() * total;
    int pick = n - 1;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += min_d2[i];
      if (acc >= r) {
        pick = i;
        break;
      }
    }
    centers.push_back(pick);
  }
  Mat centroids(k, d);
  for (int c = 0; c < k; ++c)
    std::copy(features.row(centers[c]), features.row(centers[c]) + d,
              centroids.row(c));

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d2 = 0.0;
        for (int j = 0; j < d; ++j) {
          double diff = features(i, j) - centroids(c, j);
          d2 += diff * diff;
        }
        if (d2 < best_d2) {
          best_d2 = d2;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    Mat sums(k, d);
    std::vector<int> cnt(k, 0);
    for (int i = 0; i < n; ++i) {
      cnt[assign[i]] += 1;
      for (int j = 0; j < d; ++j) sums(assign[i], j) += features(i, j);
    }
    for (int c = 0; c < k; ++c)
      if (cnt[c] > 0)
        for (int j = 0; j < d; ++j) centroids(c, j) = sums(c, j) / cnt[c];
    if (!changed) break;
  }

  // Purity: each cluster claims its most common true label.
  std::map<int, std::map<int, int>> cluster_label_counts;
  for (int i = 0; i < n; ++i) cluster_label_counts[assign[i]][labels[i]] += 1;
  int matched = 0;
  for (const auto& [c, hist] : cluster_label_counts) {
    int best = 0;
    for (const auto& [y, cnt2] : hist) best = std::max(best, cnt2);
    matched += best;
  }

  ClusterMetrics m;
  m.silhouette = sil_sum / n;
  m.purity = static_cast<double>(matched) / n;
  return m;
}

nlohmann::ordered_json evaluation_report(const EmbedTable& table, uint64_t seed,
                                         const ProbeConfig& cfg) {
  nlohmann::ordered_json probes = nlohmann::ordered_json::array();
  nlohmann::ordered_json clusters = nlohmann::ordered_json::array();

  for (Attribute space : kAttributes) {
    Mat feats = stack_embeddings(table, space);
    for (Attribute target : kAttributes) {
      std::vector<int> labels = table_labels(table, target);
      ProbeReport r = linear_probe(feats, labels, attribute_name(target),
                                   attribute_name(space), seed, cfg);
      probes.push_back(r.to_json());
    }
    std::vector<int> own = table_labels(table, space);
    ClusterMetrics cm = clustering_metrics(feats, own, seed);
    // Reference grouping: the same embeddings grouped by speaker labels.
    ClusterMetrics by_speaker =
        clustering_metrics(feats, table_labels(table, Attribute::kSpeaker), seed);
    nlohmann::ordered_json cj;
    cj["space"] = attribute_name(space);
    cj["silhouette_own_labels"] = cm.silhouette;
    cj["purity_own_labels"] = cm.purity;
    cj["silhouette_speaker_labels"] = by_speaker.silhouette;
    clusters.push_back(cj);
  }

  nlohmann::ordered_json j;
  j["probes"] = probes;
  j["clustering"] = clusters;
  return j;
}

}  // namespace srl
