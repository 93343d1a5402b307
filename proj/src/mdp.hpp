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

#ifndef FTRLMDP_SRC_MDP_HPP_
#define FTRLMDP_SRC_MDP_HPP_

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"

namespace ftrlmdp {

// Tolerances used throughout: structural equalities (row sums, one-hot
// rows) at 1e-12, derived quantities (flow conservation, round trips) at
// 1e-9. Doubles accumulated over <= 1e4 state-action pairs stay well
// inside these bounds.
inline constexpr double kStructuralTol = 1e-12;
inline constexpr double kDerivedTol = 1e-9;

// Below this an occupancy entry is treated as being on the boundary of the
// polytope; gradient/Hessian evaluations refuse it.
inline constexpr double kInteriorEps = 1e-12;

// Raw description of a layered MDP before validation. States are referred
// to by their insertion index here; LayeredMdp re-orders them by
// (layer, insertion order) on construction.
struct MdpSpec {
  struct Edge {
    int from = 0;
    int action = 0;
    int to = 0;
    double prob = 0.0;
  };
  int num_layers = 0;
  int num_actions = 0;
  std::vector<std::string> state_names;
  std::vector<int> state_layers;
  std::vector<Edge> edges;
};

// An episodic loop-free MDP: states are partitioned into layers
// 0..num_layers() with singleton first and last layers, and transitions
// only between consecutive layers. Immutable after construction.
//
// Indexing conventions (fixed, so that every vector/matrix in the library
// is bit-reproducible): states are ordered by (layer, insertion order);
// the terminal state is therefore the last index. Every non-terminal state
// has num_actions() actions, and the decision pair (s, a) has the flat
// index s * num_actions() + a. Pairs of one layer occupy a contiguous
// index range.
class LayeredMdp {
 public:
  explicit LayeredMdp(const MdpSpec& spec);

  // Built-in instances used by tests and configs.
  static LayeredMdp diamond();
  static LayeredMdp bandit(int num_actions);
  static LayeredMdp chain(int num_layers, int num_actions);

  // Text format, one MDP per file:
  //   layers L
  //   actions m
  //   state <name> layer <k>
  //   trans <state> <action-index> <state'> <prob>
  // Blank lines and '#' comments are ignored. All invariants are validated.
  static LayeredMdp parse(const std::string& text);
  static LayeredMdp load(const std::string& path);

  int num_layers() const { return num_layers_; }
  int num_states() const { return static_cast<int>(layer_of_.size()); }
  int num_actions() const { return num_actions_; }
  // Number of decision state-action pairs, i.e. (num_states()-1) * |A|.
  int num_pairs() const { return (num_states() - 1) * num_actions_; }

  int start_state() const { return 0; }
  int terminal_state() const { return num_states() - 1; }
  int layer_of(int state) const { return layer_of_[state]; }
  const std::vector<int>& states_in_layer(int k) const { return layers_[k]; }
  const std::string& state_name(int state) const { return names_[state]; }
  int state_index(const std::string& name) const;  // -1 if unknown

  int pair_index(int state, int action) const {
    return state * num_actions_ + action;
  }
  int pair_state(int pair) const { return pair / num_actions_; }
  int pair_action(int pair) const { return pair % num_actions_; }
  // Contiguous [begin, end) pair-index range of layer k, k < num_layers().
  int pair_begin(int k) const { return layers_[k].front() * num_actions_; }
  int pair_end(int k) const { return (layers_[k].back() + 1) * num_actions_; }

  // Successors of a decision pair: (next state, probability), probabilities
  // summing to 1. Next states all live in layer_of(state) + 1.
  const std::vector<std::pair<int, double>>& successors(int pair) const {
    return successors_[pair];
  }

  // P(next | state, action); 0 when not a stored successor.
  double transition(int state, int action, int next) const;

 private:
  int num_layers_ = 0;
  int num_actions_ = 0;
  std::vector<std::vector<int>> layers_;
  std::vector<int> layer_of_;
  std::vector<std::string> names_;
  std::vector<std::vector<std::pair<int, double>>> successors_;
};

struct TrajectoryStep {
  int state = 0;
  int action = 0;
  double loss = 0.0;
};
// Exactly one step per layer 0..L-1.
using Trajectory = std::vector<TrajectoryStep>;

// Vectors over the decision-pair index space. A Policy has rows summing to
// one per state; an Occupancy satisfies the polytope constraints below; a
// Loss has entries in [0, 1].
using PairVector = Eigen::VectorXd;

PairVector uniform_policy(const LayeredMdp& mdp);

// Throws std::invalid_argument unless rows sum to 1 within 1e-12 and all
// entries are >= 0.
void validate_policy(const LayeredMdp& mdp, const PairVector& policy);

// Largest violation of the occupancy constraints: per-layer normalization,
// flow conservation, and nonnegativity.
double occupancy_violation(const LayeredMdp& mdp, const PairVector& q);
void validate_occupancy(const LayeredMdp& mdp, const PairVector& q,
                        double tol = kDerivedTol);

// Forward visit probabilities per state under `policy`.
Eigen::VectorXd state_visit_probs(const LayeredMdp& mdp,
                                  const PairVector& policy);

// q(s,a) = Pr[visit (s,a)] under the policy; satisfies the occupancy
// constraints exactly by construction.
PairVector occupancy_from_policy(const LayeredMdp& mdp,
                                 const PairVector& policy);

// Induced policy q(s,a)/q(s); states with q(s) = 0 get the uniform row.
PairVector policy_from_occupancy(const LayeredMdp& mdp, const PairVector& q);

double expected_loss(const PairVector& q, const PairVector& loss);

Trajectory sample_trajectory(const LayeredMdp& mdp, const PairVector& policy,
                             const PairVector& loss, Rng& rng);

// reach(pair(s,a), s') = probability of visiting s' after taking a at s and
// following `policy`; zero for layer_of(s') <= layer_of(s). Layer sums are
// at most 1.
Eigen::MatrixXd reachability(const LayeredMdp& mdp, const PairVector& policy);

// lambda * q1 + (1 - lambda) * q2; throws std::domain_error outside [0,1].
PairVector convex_combine(const PairVector& q1, const PairVector& q2,
                          double lambda);

struct BestPolicy {
  std::vector<int> actions;  // per non-terminal state
  PairVector policy;         // one-hot rows
  double total_loss = 0.0;
};

// Deterministic policy minimizing <q^pi, cumulative_loss> by backward
// dynamic programming; ties broken toward the lowest action index.
BestPolicy best_fixed_policy(const LayeredMdp& mdp,
                             const PairVector& cumulative_loss);

}  // namespace ftrlmdp

#endif  // FTRLMDP_SRC_MDP_HPP_
