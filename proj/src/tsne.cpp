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

#include "srl/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "srl/rng.hpp"

namespace srl {

Mat tsne_2d(const Mat& x, const TsneConfig& cfg) {
  int n = x.rows;
  if (n < 10) throw ValidationError("tsne_2d: need at least 10 points");
  double perplexity = std::min(cfg.perplexity, (n - 1) / 3.0);

  // Pairwise squared distances in the input space.
  Mat d2(n, n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int c = 0; c < x.cols; ++c) {
        double diff = x(i, c) - x(j, c);
        acc += diff * diff;
      }
      d2(i, j) = acc;
    }

  // Conditional affinities with per-point precision found by bisection on
  // the target perplexity.
  Mat p(n, n);
  double log_perp = std::log(perplexity);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double beta = 1.0, beta_lo = 0.0,
           beta_hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 64; ++it) {
      double sum = 0.0, sum_dp = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        double e = std::exp(-beta * d2(i, j));
        sum += e;
        sum_dp += e * d2(i, j);
      }
      if (sum <= 0.0) {
        beta /= 2.0;
        continue;
      }
      double entropy = std::log(sum) + beta * sum_dp / sum;
      if (std::abs(entropy - log_perp) < 1e-5) break;
      if (entropy > log_perp) {
        beta_lo = beta;
        beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
      } else {
        beta_hi = beta;
        beta = 0.5 * (beta + beta_lo);
      }
    }
    double sum = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) sum += std::exp(-beta * d2(i, j));
    for (int j = 0; j < n; ++j)
      p(i, j) = j == i ? 0.0 : std::exp(-beta * d2(i, j)) / sum;
  }

  // Symmetrize and floor.
  Mat pj(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      pj(i, j) = std::max((p(i, j) + p(j, i)) / (2.0 * n), 1e-12);

  Mat y(n, 2);
  Rng rng(mix_key(cfg.seed, stream::kTsne));
  for (double& v : y.d) v = 1e-4 * rng.gaussian();

  Mat vel(n, 2);
  Mat grad(n, 2);
  Mat q(n, n);
  for (int iter = 0; iter < cfg.iters; ++iter) {
    double exaggeration = iter < cfg.exaggeration_iters ? cfg.exaggeration : 1.0;
    double momentum = iter < cfg.iters / 2 ? 0.5 : 0.8;

    double qsum = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (j == i) {
          q(i, j) = 0.0;
          continue;
        }
        double dx = y(i, 0) - y(j, 0);
        double dy = y(i, 1) - y(j, 1);
        q(i, j) = 1.0 / (1.0 + dx * dx + dy * dy);
        qsum += q(i, j);
      }

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        double num = q(i, j);
        double qij = std::max(num / qsum, 1e-12);
        double coef = 4.0 * (exaggeration * pj(i, j) - qij) * num;
        gx += coef * (y(i, 0) - y(j, 0));
        gy += coef * (y(i, 1) - y(j, 1));
      }
      grad(i, 0) = gx;
      grad(i, 1) = gy;
    }
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 2; ++c) {
        vel(i, c) = momentum * vel(i, c) - cfg.learning_rate * grad(i, c);
        y(i, c) += vel(i, c);
      }
    // Re-center to keep coordinates bounded.
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
      mx += y(i, 0);
      my += y(i, 1);
    }
    mx /= n;
    my /= n;
    for (int i = 0; i < n; ++i) {
      y(i, 0) -= mx;
      y(i, 1) -= my;
    }
  }
  return y;
}

namespace {

struct Rgb {
  uint8_t r, g, b;
};

// 12-color palette, then golden-angle hues beyond it.
Rgb class_color(int id) {
  static const Rgb kPalette[] = {
      {31, 119, 180}, {255, 127, 14},  {44, 160, 44},   {214, 39, 40},
      {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127},
      {188, 189, 34}, {23, 190, 207},  {174, 199, 232}, {255, 187, 120}};
  if (id >= 0 && id < 12) return kPalette[id];
  double h = std::fmod(id * 0.61803398875, 1.0) * 6.0;
  int sector = static_cast<int>(h);
  double f = h - sector;
  uint8_t v = 230, pq = 60;
  uint8_t t = static_cast<uint8_t>(pq + (v - pq) * f);
  uint8_t s = static_cast<uint8_t>(v - (v - pq) * f);
  switch (sector % 6) {
    case 0: return {v, t, pq};
    case 1: return {s, v, pq};
    case 2: return {pq, v, t};
    case 3: return {pq, s, v};
    case 4: return {t, pq, v};
    default: return {v, pq, s};
  }
}

}  // namespace

void write_bmp_scatter(const Mat& coords, const std::vector<int>& color_ids,
                       const std::string& path, int size_px) {
  int n = coords.rows;
  if (n != static_cast<int>(color_ids.size()))
    throw ValidationError("write_bmp_scatter: size mismatch");
  int w = size_px, h = size_px;

  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  for (int i = 0; i < n; ++i) {
    min_x = std::min(min_x, coords(i, 0));
    max_x = std::max(max_x, coords(i, 0));
    min_y = std::min(min_y, coords(i, 1));
    max_y = std::max(max_y, coords(i, 1));
  }
  double span_x = std::max(max_x - min_x, 1e-9);
  double span_y = std::max(max_y - min_y, 1e-9);
  int margin = 20;

  std::vector<uint8_t> img(static_cast<size_t>(w) * h * 3, 255);
  auto put = [&](int px, int py, Rgb c) {
    if (px < 0 || px >= w || py < 0 || py >= h) return;
    size_t off = (static_cast<size_t>(py) * w + px) * 3;
    img[off] = c.b;  // BMP stores BGR
    img[off + 1] = c.g;
    img[off + 2] = c.r;
  };
  for (int i = 0; i < n; ++i) {
    int px = margin + static_cast<int>((coords(i, 0) - min_x) / span_x * (w - 2 * margin));
    int py = margin + static_cast<int>((coords(i, 1) - min_y) / span_y * (h - 2 * margin));
    Rgb c = class_color(color_ids[i]);
    for (int dy = -2; dy <= 2; ++dy)
      for (int dx = -2; dx <= 2; ++dx)
        if (dx * dx + dy * dy <= 4) put(px + dx, py + dy, c);
  }

  int row_bytes = w * 3;
  int pad = (4 - row_bytes % 4) % 4;
  uint32_t data_size = static_cast<uint32_t>((row_bytes + pad) * h);
  uint32_t file_size = 54 + data_size;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write image '" + path + "'");
  uint8_t header[54] = {0};
  header[0] = 'B';
  header[1] = 'M';
  std::memcpy(header + 2, &file_size, 4);
  uint32_t off_bits = 54;
  std::memcpy(header + 10, &off_bits, 4);
  uint32_t info_size = 40;
  std::memcpy(header + 14, &info_size, 4);
  int32_t wi = w, hi = h;
  std::memcpy(header + 18, &wi, 4);
  std::memcpy(header + 22, &hi, 4);
  uint16_t planes = 1, bpp = 24;
  std::memcpy(header + 26, &planes, 2);
  std::memcpy(header + 28, &bpp, 2);
  std::memcpy(header + 34, &data_size, 4);
  f.write(reinterpret_cast<const char*>(header), 54);
  std::vector<uint8_t> padding(pad, 0);
  for (int row = h - 1; row >= 0; --row) {  // bottom-up
    f.write(reinterpret_cast<const char*>(img.data() + static_cast<size_t>(row) * w * 3),
            row_bytes);
    if (pad) f.write(reinterpret_cast<const char*>(padding.data()), pad);
  }
  if (!f) throw IoError("write failure on image '" + path + "'");
}

void write_coords_tsv(const Mat& coords, const std::vector<std::string>& ids,
                      const std::vector<int>& labels, const std::string& path) {
  int n = coords.rows;
  if (n != static_cast<int>(ids.size()) || n != static_cast<int>(labels.size()))
    throw ValidationError("write_coords_tsv: size mismatch");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write sidecar '" + path + "'");
  f << "id\tlabel\tx\ty\n";
  for (int i = 0; i < n; ++i)
    f << ids[i] << "\t" << labels[i] << "\t" << format_g17(coords(i, 0)) << "\t"
      << format_g17(coords(i, 1)) << "\n";
}

Mat read_coords_tsv(const std::string& path, std::vector<std::string>* ids,
                    std::vector<int>* labels) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open sidecar '" + path + "'");
  std::string line;
  if (!std::getline(f, line) || line != "id\tlabel\tx\ty")
    throw ParseError("bad sidecar header in '" + path + "'");
  std::vector<double> xs, ys;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, label_s, x_s, y_s;
    if (!std::getline(ls, id, '\t') || !std::getline(ls, label_s, '\t') ||
        !std::getline(ls, x_s, '\t') || !std::getline(ls, y_s))
      throw ParseError("sidecar parse error at line " + std::to_string(lineno));
    if (ids) ids->push_back(id);
    if (labels) labels->push_back(std::stoi(label_s));
    xs.push_back(std::strtod(x_s.c_str(), nullptr));
    ys.push_back(std::strtod(y_s.c_str(), nullptr));
  }
  Mat coords(static_cast<int>(xs.size()), 2);
  for (size_t i = 0; i < xs.size(); ++i) {
    coords(static_cast<int>(i), 0) = xs[i];
    coords(static_cast<int>(i), 1) = ys[i];
  }
  return coords;
}

}  // namespace srl
