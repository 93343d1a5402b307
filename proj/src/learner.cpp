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

#include "learner.hpp"

#include <stdexcept>

namespace ftrlmdp {

LossEstimate estimate_loss(const LayeredMdp& mdp, const Trajectory& traj,
                           const PairVector& q) {
  if (static_cast<int>(traj.size()) != mdp.num_layers())
    throw std::invalid_argument("trajectory has wrong length");
  LossEstimate est;
  est.entries.reserve(traj.size());
  for (const auto& step : traj) {
    const int pair = mdp.pair_index(step.state, step.action);
    if (q[pair] < kInteriorEps)
      throw std::domain_error(
          "visited pair has occupancy below the interior threshold");
    est.entries.emplace_back(pair, step.loss / q[pair]);
  }
  return est;
}

Learner::Learner(const LayeredMdp* mdp, AlgorithmSpec algorithm,
                 SolveConfig solve_config)
    : mdp_(mdp),
      algorithm_(std::move(algorithm)),
      solve_config_(std::move(solve_config)),
      cumulative_estimate_(PairVector::Zero(mdp->num_pairs())) {}

PairVector Learner::solve_episode(int t, SolveReport* report) const {
  SolveConfig config = solve_config_;
  if (episode_ > 0) config.warm_start = occupancy_;
  auto [q, rep] = std::visit(
      [&](const auto& algo) {
        using T = std::decay_t<decltype(algo)>;
        if constexpr (std::is_same_v<T, HybridAlgorithm>) {
          return solve_ftrl(*mdp_, cumulative_estimate_, algo.params, t,
                            config);
        } else {
          return solve_oreps_step(*mdp_, cumulative_estimate_,
                                  algo.params.eta(t), config);
        }
      },
      algorithm_);
  if (report) *report = rep;
  return q;
}

PairVector Learner::next_occupancy() { return solve_episode(episode_ + 1, nullptr); }

Learner::StepResult Learner::step(const PairVector& env_loss, Rng& rng) {
  if (env_loss.size() != mdp_->num_pairs())
    throw std::invalid_argument("loss has wrong size");
  StepResult result;
  const int t = episode_ + 1;
  result.occupancy = solve_episode(t, &result.report);
  const PairVector policy = policy_from_occupancy(*mdp_, result.occupancy);
  result.trajectory = sample_trajectory(*mdp_, policy, env_loss, rng);
  result.estimate = estimate_loss(*mdp_, result.trajectory, result.occupancy);
  for (const auto& [i, x] : result.estimate.entries)
    cumulative_estimate_[i] += x;
  occupancy_ = result.occupancy;
  episode_ = t;
  return result;
}

}  // namespace ftrlmdp
