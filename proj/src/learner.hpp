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

#ifndef FTRLMDP_SRC_LEARNER_HPP_
#define FTRLMDP_SRC_LEARNER_HPP_

#include <cmath>
#include <utility>
#include <variant>
#include <vector>

#include "solver.hpp"

namespace ftrlmdp {

// Importance-weighted loss estimate: loss(s,a)/q(s,a) at visited pairs,
// zero elsewhere. At most one entry per layer.
struct LossEstimate {
  std::vector<std::pair<int, double>> entries;  // (pair index, value)
  PairVector dense(int num_pairs) const {
    PairVector v = PairVector::Zero(num_pairs);
    for (const auto& [i, x] : entries) v[i] = x;
    return v;
  }
};

// Throws std::domain_error if a visited pair has occupancy below the
// interior threshold (cannot happen for occupancies returned by a valid
// solve).
LossEstimate estimate_loss(const LayeredMdp& mdp, const Trajectory& traj,
                           const PairVector& q);

struct OrepsParams {
  // eta_t = gamma / sqrt(t) unless fixed_eta is set.
  double gamma = 0.0;
  double fixed_eta = 0.0;  // > 0 selects a constant learning rate

  // gamma = sqrt(log(|S||A|) / (L |S| |A|)), the standard tuning shape.
  static OrepsParams standard(const LayeredMdp& mdp) {
    const double sa =
        static_cast<double>(mdp.num_states()) * mdp.num_actions();
    OrepsParams p;
    p.gamma = std::sqrt(std::log(sa) / (mdp.num_layers() * sa));
    return p;
  }
  double eta(int t) const {
    return fixed_eta > 0.0 ? fixed_eta
                           : gamma / std::sqrt(static_cast<double>(t));
  }
};

struct HybridAlgorithm {
  RegularizerParams params;
};
struct OrepsAlgorithm {
  OrepsParams params;
};
using AlgorithmSpec = std::variant<HybridAlgorithm, OrepsAlgorithm>;

// One full bandit-feedback FTRL learner: per episode it solves for the
// next occupancy (warm-started from the previous one), plays the induced
// policy, and feeds the importance-weighted estimate back into the
// cumulative loss. A Learner is a plain value; copying it forks the state.
class Learner {
 public:
  Learner(const LayeredMdp* mdp, AlgorithmSpec algorithm,
          SolveConfig solve_config = {});

  struct StepResult {
    PairVector occupancy;  // q_t used during the episode
    Trajectory trajectory;
    LossEstimate estimate;
    SolveReport report;
  };

  // Runs episode t+1 against the loss function of that episode. The loss is
  // revealed to the learner only through the visited pairs.
  StepResult step(const PairVector& env_loss, Rng& rng);

  // The occupancy the next call to step() will play (solves if needed).
  PairVector next_occupancy();

  int episode() const { return episode_; }
  const PairVector& cumulative_estimate() const {
    return cumulative_estimate_;
  }
  const PairVector& occupancy() const { return occupancy_; }

 private:
  PairVector solve_episode(int t, SolveReport* report) const;

  const LayeredMdp* mdp_;
  AlgorithmSpec algorithm_;
  SolveConfig solve_config_;
  PairVector cumulative_estimate_;
  PairVector occupancy_;  // q_t of the last completed episode
  int episode_ = 0;
};

}  // namespace ftrlmdp

#endif  // FTRLMDP_SRC_LEARNER_HPP_
