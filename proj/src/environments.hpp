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

#ifndef FTRLMDP_SRC_ENVIRONMENTS_HPP_
#define FTRLMDP_SRC_ENVIRONMENTS_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mdp.hpp"

namespace ftrlmdp {

// Loss-sequence generator. Episode losses are deterministic given the
// environment's seed, the episode index and (for adaptive adversaries) the
// learner's past occupancies — never the current episode's randomness.
// Every generated loss lies in [0, 1].
class Environment {
 public:
  virtual ~Environment() = default;
  virtual PairVector losses(int t, const std::vector<PairVector>& history) = 0;
  virtual double consumed_corruption() const { return 0.0; }
};

enum class NoiseKind { kBernoulli, kUniform };

// i.i.d. losses around fixed means: Bernoulli(mean), or uniform on
// [mean - width, mean + width] clipped to [0, 1].
class StochasticEnv : public Environment {
 public:
  StochasticEnv(PairVector means, NoiseKind noise, double width,
                std::uint64_t seed);
  PairVector losses(int t, const std::vector<PairVector>& history) override;
  const PairVector& means() const { return means_; }

 private:
  PairVector means_;
  NoiseKind noise_;
  double width_;
  std::uint64_t seed_;
};

// Adversarial schedule that switches between two loss tables in phases of
// fixed length. The phase sign pattern is one of:
//   alternate    - A, B, A, B, ...
//   random       - i.i.d. fair coin per phase, drawn from `pattern_seed`
//                  only (shared across runs so all seeds face the same
//                  adversary)
//   sqrt-balance - deterministic signs steering the running sign sum to
//                  ~sqrt(#phases), the canonical sqrt(T)-regret profile
class SwitchingAdversaryEnv : public Environment {
 public:
  enum class Pattern { kAlternate, kRandom, kSqrtBalance };
  SwitchingAdversaryEnv(PairVector table_a, PairVector table_b,
                        int phase_length, Pattern pattern,
                        std::uint64_t pattern_seed);
  PairVector losses(int t, const std::vector<PairVector>& history) override;
  // True if phase i uses table A.
  bool phase_uses_a(int phase) const;

 private:
  PairVector table_a_, table_b_;
  int phase_length_;
  Pattern pattern_;
  std::uint64_t pattern_seed_;
  mutable std::vector<signed char> sign_cache_;  // for kSqrtBalance
};

// Adaptive adversary: charges `high` on the modal action of the learner's
// most recent occupancy and `low` elsewhere. Uses only past occupancies.
class AdaptiveAdversaryEnv : public Environment {
 public:
  AdaptiveAdversaryEnv(const LayeredMdp* mdp, double low, double high);
  PairVector losses(int t, const std::vector<PairVector>& history) override;

 private:
  const LayeredMdp* mdp_;
  double low_, high_;
};

// Base stochastic losses corrupted within a total budget
// C = 2 sum_t sum_{k<L} max_{s in S_k, a} |realized - base|. A corrupted
// episode is flipped toward the worst action: loss 1 on the base-optimal
// action of every state, 0 elsewhere; the final corrupted episode is
// partially flipped so the consumed budget never exceeds C. Placement is
// front-loaded (episodes 1, 2, ...) or uniform-random.
class CorruptedEnv : public Environment {
 public:
  enum class Placement { kFront, kRandom };
  CorruptedEnv(const LayeredMdp* mdp, PairVector base_means, NoiseKind noise,
               double width, std::uint64_t seed, double budget,
               Placement placement, int horizon);
  PairVector losses(int t, const std::vector<PairVector>& history) override;
  double consumed_corruption() const override { return consumed_; }

 private:
  const LayeredMdp* mdp_;
  StochasticEnv base_;
  double budget_;
  Placement placement_;
  std::uint64_t seed_;
  int horizon_;
  std::vector<int> pi_star_;  // base-optimal action per state
  double consumed_ = 0.0;
  bool budget_exhausted_ = false;
  int last_t_ = 0;
};

// Sub-optimality gaps of a stochastic environment: Q from backward
// induction on the mean losses, pi_star the per-state argmin, and
// delta(s,a) = Q(s,a) - Q(s,pi_star(s)) for a != pi_star(s) (zero at the
// optimal action). Throws if some state's optimal action is not unique.
struct GapInfo {
  PairVector q_values;
  PairVector delta;
  std::vector<int> pi_star;
  PairVector pi_star_policy;  // one-hot
  double min_gap = 0.0;
};
GapInfo gap_function(const LayeredMdp& mdp, const PairVector& mean_losses);

// Random layered MDP generation. Widths are for the interior layers
// 1..L-1; missing entries default to `default_width`. Every generated
// instance passes all LayeredMdp invariants (in particular reachability).
struct MdpGeneratorConfig {
  int num_layers = 2;
  int num_actions = 2;
  std::vector<int> widths;
  int default_width = 2;
  double density = 1.0;  // fraction of the next layer each pair can reach
  std::uint64_t seed = 0;
};
LayeredMdp random_layered_mdp(const MdpGeneratorConfig& config);

}  // namespace ftrlmdp

#endif  // FTRLMDP_SRC_ENVIRONMENTS_HPP_
