// Copyright 2026 The ftrlmdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FTRLMDP_SRC_RNG_HPP_
#define FTRLMDP_SRC_RNG_HPP_

#include <cstdint>
#include <random>

namespace ftrlmdp {

// splitmix64 step; used to derive independent sub-streams from a seed so
// that episode t of run r always sees the same random bits regardless of
// what happened in other episodes or runs.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t domain,
                                   std::uint64_t counter) {
  return mix64(mix64(seed ^ mix64(domain)) + counter);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1) with 53 random bits; bit-reproducible across
  // platforms, unlike std::uniform_real_distribution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Index into a discrete distribution given by `probs` (assumed to sum to
  // ~1; the last positive entry absorbs rounding slack).
  template <typename Vec>
  int categorical(const Vec& probs, int begin, int end) {
    const double u = uniform();
    double acc = 0.0;
    int last_positive = begin;
    for (int i = begin; i < end; ++i) {
      const double p = probs[i];
      if (p > 0.0) last_positive = i;
      acc += p;
      if (u < acc) return i;
    }
    return last_positive;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ftrlmdp

#endif  // FTRLMDP_SRC_RNG_HPP_
