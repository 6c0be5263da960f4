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

#ifndef SRL_RNG_HPP_
#define SRL_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace srl {

// SplitMix64 step. Every random draw in the project goes through this so
// results are identical across platforms and standard-library versions
// (std::distributions make no such guarantee).
inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Key-mixing for derived streams: mix(seed, tag, tag, ...).
inline uint64_t mix_key(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
  return splitmix64(s);
}

template <typename... Rest>
uint64_t mix_key(uint64_t a, uint64_t b, Rest... rest) {
  return mix_key(mix_key(a, b), rest...);
}

// Deterministic counter-seeded generator. Cheap to construct; the usual
// pattern is one short-lived Rng per (seed, stream, step) so that nothing
// ever depends on how many draws earlier code consumed.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ 0xd1b54a32d192ed03ULL) {
    // Warm up so that small seeds do not produce correlated first draws.
    splitmix64(state_);
  }

  uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(next_u64() % span);
  }

  // Standard normal via Box-Muller (no caching: two uniforms per draw,
  // fully reproducible).
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Rng fork(uint64_t tag) const { return Rng(mix_key(state_, tag)); }

 private:
  uint64_t state_;
};

// Fixed stream tags. Keeping them in one place guarantees that unrelated
// subsystems never collide on a derived seed.
namespace stream {
constexpr uint64_t kSynthContent = 0x01;
constexpr uint64_t kSynthDuration = 0x02;
constexpr uint64_t kRelabel = 0x03;
constexpr uint64_t kSliceOffset = 0x04;
constexpr uint64_t kBatchCompose = 0x05;
constexpr uint64_t kParamInit = 0x06;
constexpr uint64_t kDropout = 0x07;
constexpr uint64_t kProbeSplit = 0x08;
constexpr uint64_t kKmeans = 0x09;
constexpr uint64_t kTsne = 0x0a;
constexpr uint64_t kReconTrain = 0x0b;
constexpr uint64_t kReconNoise = 0x0c;
constexpr uint64_t kQInit = 0x0d;
}  // namespace stream

}  // namespace srl

#endif  // SRL_RNG_HPP_
