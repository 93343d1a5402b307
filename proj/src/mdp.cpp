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

#include "mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace ftrlmdp {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("mdp: " + msg);
}

}  // namespace

LayeredMdp::LayeredMdp(const MdpSpec& spec) {
  num_layers_ = spec.num_layers;
  num_actions_ = spec.num_actions;
  if (num_layers_ < 1) fail("num_layers must be >= 1");
  if (num_actions_ < 1) fail("num_actions must be >= 1");
  const int n_states = static_cast<int>(spec.state_names.size());
  if (static_cast<int>(spec.state_layers.size()) != n_states)
    fail("state_names and state_layers disagree");

  // Re-order states by (layer, insertion order).
  std::vector<int> order(n_states);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return spec.state_layers[a] < spec.state_layers[b];
  });
  std::vector<int> new_index(n_states);
  layers_.assign(num_layers_ + 1, {});
  for (int i = 0; i < n_states; ++i) {
    const int old = order[i];
    const int layer = spec.state_layers[old];
    if (layer < 0 || layer > num_layers_)
      fail("state '" + spec.state_names[old] + "' has layer out of range");
    new_index[old] = i;
    names_.push_back(spec.state_names[old]);
    layer_of_.push_back(layer);
    layers_[layer].push_back(i);
  }
  if (layers_[0].size() != 1) fail("layer 0 must be a single start state");
  if (layers_[num_layers_].size() != 1)
    fail("last layer must be a single terminal state");
  for (int k = 0; k <= num_layers_; ++k)
    if (layers_[k].empty()) fail("layer " + std::to_string(k) + " is empty");

  successors_.assign(num_pairs(), {});
  for (const auto& e : spec.edges) {
    if (e.from < 0 || e.from >= n_states || e.to < 0 || e.to >= n_states)
      fail("transition references unknown state");
    if (e.action < 0 || e.action >= num_actions_)
      fail("transition references unknown action");
    const int from = new_index[e.from];
    const int to = new_index[e.to];
    if (layer_of_[to] != layer_of_[from] + 1)
      fail("transition " + names_[from] + " -> " + names_[to] +
           " does not go to the next layer");
    if (e.prob < 0.0) fail("negative transition probability");
    if (e.prob == 0.0) continue;
    successors_[pair_index(from, e.action)].emplace_back(to, e.prob);
  }

  for (int s = 0; s < n_states - 1; ++s) {
    for (int a = 0; a < num_actions_; ++a) {
      auto& row = successors_[pair_index(s, a)];
      std::sort(row.begin(), row.end());
      for (size_t i = 1; i < row.size(); ++i)
        if (row[i].first == row[i - 1].first)
          fail("duplicate transition from (" + names_[s] + ", " +
               std::to_string(a) + ")");
      double sum = 0.0;
      for (const auto& [t, p] : row) sum += p;
      if (std::abs(sum - 1.0) > kStructuralTol)
        fail("outgoing probabilities of (" + names_[s] + ", " +
             std::to_string(a) + ") sum to " + std::to_string(sum));
    }
  }

  // Reachability: one forward pass, keeping a state if any action of any
  // reachable predecessor hits it. Unreachable states are a construction
  // error rather than being silently pruned.
  std::vector<char> reached(n_states, 0);
  reached[0] = 1;
  for (int k = 0; k < num_layers_; ++k) {
    for (int s : layers_[k]) {
      if (!reached[s]) continue;
      for (int a = 0; a < num_actions_; ++a)
        for (const auto& [t, p] : successors_[pair_index(s, a)])
          if (p > 0.0) reached[t] = 1;
    }
  }
  for (int s = 0; s < n_states; ++s)
    if (!reached[s]) fail("state '" + names_[s] + "' is unreachable");
}

LayeredMdp LayeredMdp::diamond() {
  MdpSpec spec;
  spec.num_layers = 2;
  spec.num_actions = 2;
  spec.state_names = {"s0", "u", "v", "s2"};
  spec.state_layers = {0, 1, 1, 2};
  spec.edges = {{0, 0, 1, 1.0}, {0, 1, 2, 1.0},
                {1, 0, 3, 1.0}, {1, 1, 3, 1.0},
                {2, 0, 3, 1.0}, {2, 1, 3, 1.0}};
  return LayeredMdp(spec);
}

LayeredMdp LayeredMdp::bandit(int num_actions) {
  MdpSpec spec;
  spec.num_layers = 1;
  spec.num_actions = num_actions;
  spec.state_names = {"s0", "s1"};
  spec.state_layers = {0, 1};
  for (int a = 0; a < num_actions; ++a)
    spec.edges.push_back({0, a, 1, 1.0});
  return LayeredMdp(spec);
}

LayeredMdp LayeredMdp::chain(int num_layers, int num_actions) {
  MdpSpec spec;
  spec.num_layers = num_layers;
  spec.num_actions = num_actions;
  for (int k = 0; k <= num_layers; ++k) {
    spec.state_names.push_back("s" + std::to_string(k));
    spec.state_layers.push_back(k);
  }
  for (int k = 0; k < num_layers; ++k)
    for (int a = 0; a < num_actions; ++a)
      spec.edges.push_back({k, a, k + 1, 1.0});
  return LayeredMdp(spec);
}

LayeredMdp LayeredMdp::parse(const std::string& text) {
  MdpSpec spec;
  std::unordered_map<std::string, int> index;
  bool have_layers = false, have_actions = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    auto bad = [&](const std::string& why) {
      fail("line " + std::to_string(lineno) + ": " + why);
    };
    if (kw == "layers") {
      if (!(ls >> spec.num_layers)) bad("expected 'layers <L>'");
      have_layers = true;
    } else if (kw == "actions") {
      if (!(ls >> spec.num_actions)) bad("expected 'actions <m>'");
      have_actions = true;
    } else if (kw == "state") {
      std::string name, layer_kw;
      int layer;
      if (!(ls >> name >> layer_kw >> layer) || layer_kw != "layer")
        bad("expected 'state <name> layer <k>'");
      if (index.count(name)) bad("duplicate state '" + name + "'");
      index[name] = static_cast<int>(spec.state_names.size());
      spec.state_names.push_back(name);
      spec.state_layers.push_back(layer);
    } else if (kw == "trans") {
      std::string from, to;
      int action;
      double prob;
      if (!(ls >> from >> action >> to >> prob))
        bad("expected 'trans <s> <a> <s'> <p>'");
      if (!index.count(from)) bad("unknown state '" + from + "'");
      if (!index.count(to)) bad("unknown state '" + to + "'");
      spec.edges.push_back({index[from], action, index[to], prob});
    } else {
      bad("unknown keyword '" + kw + "'");
    }
    std::string extra;
    if (ls >> extra) bad("trailing tokens");
  }
  if (!have_layers || !have_actions) fail("missing 'layers' or 'actions'");
  return LayeredMdp(spec);
}

LayeredMdp LayeredMdp::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

int LayeredMdp::state_index(const std::string& name) const {
  for (int s = 0; s < num_states(); ++s)
    if (names_[s] == name) return s;
  return -1;
}

double LayeredMdp::transition(int state, int action, int next) const {
  for (const auto& [t, p] : successors_[pair_index(state, action)])
    if (t == next) return p;
  return 0.0;
}

PairVector uniform_policy(const LayeredMdp& mdp) {
  return PairVector::Constant(mdp.num_pairs(), 1.0 / mdp.num_actions());
}

void validate_policy(const LayeredMdp& mdp, const PairVector& policy) {
  if (policy.size() != mdp.num_pairs())
    throw std::invalid_argument("policy has wrong size");
  const int m = mdp.num_actions();
  for (int s = 0; s < mdp.num_states() - 1; ++s) {
    double row = 0.0;
    for (int a = 0; a < m; ++a) {
      const double p = policy[mdp.pair_index(s, a)];
      if (p < 0.0) throw std::invalid_argument("negative policy entry");
      row += p;
    }
    if (std::abs(row - 1.0) > kStructuralTol)
      throw std::invalid_argument("policy row of state " + mdp.state_name(s) +
                                  " sums to " + std::to_string(row));
  }
}

Eigen::VectorXd state_visit_probs(const LayeredMdp& mdp,
                                  const PairVector& policy) {
  Eigen::VectorXd visit = Eigen::VectorXd::Zero(mdp.num_states());
  visit[mdp.start_state()] = 1.0;
  for (int k = 0; k < mdp.num_layers(); ++k) {
    for (int s : mdp.states_in_layer(k)) {
      for (int a = 0; a < mdp.num_actions(); ++a) {
        const int pair = mdp.pair_index(s, a);
        const double w = visit[s] * policy[pair];
        if (w == 0.0) continue;
        for (const auto& [t, p] : mdp.successors(pair)) visit[t] += w * p;
      }
    }
  }
  return visit;
}

PairVector occupancy_from_policy(const LayeredMdp& mdp,
                                 const PairVector& policy) {
  validate_policy(mdp, policy);
  Eigen::VectorXd visit = Eigen::VectorXd::Zero(mdp.num_states());
  visit[mdp.start_state()] = 1.0;
  PairVector q = PairVector::Zero(mdp.num_pairs());
  for (int k = 0; k < mdp.num_layers(); ++k) {
    for (int s : mdp.states_in_layer(k)) {
      for (int a = 0; a < mdp.num_actions(); ++a) {
        const int pair = mdp.pair_index(s, a);
        q[pair] = visit[s] * policy[pair];
        if (q[pair] == 0.0) continue;
        for (const auto& [t, p] : mdp.successors(pair))
          visit[t] += q[pair] * p;
      }
    }
  }
  return q;
}

PairVector policy_from_occupancy(const LayeredMdp& mdp, const PairVector& q) {
  if (q.size() != mdp.num_pairs())
    throw std::invalid_argument("occupancy has wrong size");
  PairVector policy(mdp.num_pairs());
  const int m = mdp.num_actions();
  for (int s = 0; s < mdp.num_states() - 1; ++s) {
    double mass = 0.0;
    for (int a = 0; a < m; ++a) mass += q[mdp.pair_index(s, a)];
    for (int a = 0; a < m; ++a) {
      const int pair = mdp.pair_index(s, a);
      policy[pair] = mass > 0.0 ? q[pair] / mass : 1.0 / m;
    }
  }
  return policy;
}

double occupancy_violation(const LayeredMdp& mdp, const PairVector& q) {
  if (q.size() != mdp.num_pairs())
    throw std::invalid_argument("occupancy has wrong size");
  double worst = 0.0;
  for (int i = 0; i < q.size(); ++i) worst = std::max(worst, -q[i]);
  for (int k = 0; k < mdp.num_layers(); ++k) {
    double layer_sum = 0.0;
    for (int i = mdp.pair_begin(k); i < mdp.pair_end(k); ++i)
      layer_sum += q[i];
    worst = std::max(worst, std::abs(layer_sum - 1.0));
  }
  // Flow conservation, Eq. (2): inflow through P equals outflow.
  Eigen::VectorXd inflow = Eigen::VectorXd::Zero(mdp.num_states());
  for (int i = 0; i < q.size(); ++i)
    for (const auto& [t, p] : mdp.successors(i)) inflow[t] += q[i] * p;
  for (int k = 1; k < mdp.num_layers(); ++k) {
    for (int s : mdp.states_in_layer(k)) {
      double outflow = 0.0;
      for (int a = 0; a < mdp.num_actions(); ++a)
        outflow += q[mdp.pair_index(s, a)];
      worst = std::max(worst, std::abs(inflow[s] - outflow));
    }
  }
  return worst;
}

void validate_occupancy(const LayeredMdp& mdp, const PairVector& q,
                        double tol) {
  const double v = occupancy_violation(mdp, q);
  if (v > tol)
    throw std::invalid_argument("occupancy constraints violated by " +
                                std::to_string(v));
}

double expected_loss(const PairVector& q, const PairVector& loss) {
  if (q.size() != loss.size())
    throw std::invalid_argument("loss has wrong size");
  return q.dot(loss);
}

Trajectory sample_trajectory(const LayeredMdp& mdp, const PairVector& policy,
                             const PairVector& loss, Rng& rng) {
  validate_policy(mdp, policy);
  Trajectory traj;
  traj.reserve(mdp.num_layers());
  int s = mdp.start_state();
  for (int k = 0; k < mdp.num_layers(); ++k) {
    const int base = mdp.pair_index(s, 0);
    const int a =
        rng.categorical(policy, base, base + mdp.num_actions()) - base;
    const int pair = mdp.pair_index(s, a);
    traj.push_back({s, a, loss[pair]});
    const auto& row = mdp.successors(pair);
    double u = rng.uniform();
    int next = row.back().first;
    double acc = 0.0;
    for (const auto& [t, p] : row) {
      acc += p;
      if (u < acc) {
        next = t;
        break;
      }
    }
    s = next;
  }
  return traj;
}

Eigen::MatrixXd reachability(const LayeredMdp& mdp, const PairVector& policy) {
  validate_policy(mdp, policy);
  const int n = mdp.num_pairs();
  const int ns = mdp.num_states();
  Eigen::MatrixXd reach = Eigen::MatrixXd::Zero(n, ns);
  for (int pair = 0; pair < n; ++pair) {
    const int k0 = mdp.layer_of(mdp.pair_state(pair));
    for (const auto& [t, p] : mdp.successors(pair)) reach(pair, t) = p;
    // Push the distribution forward one layer at a time under the policy.
    for (int k = k0 + 1; k < mdp.num_layers(); ++k) {
      for (int sm : mdp.states_in_layer(k)) {
        const double mass = reach(pair, sm);
        if (mass == 0.0) continue;
        for (int a = 0; a < mdp.num_actions(); ++a) {
          const int p2 = mdp.pair_index(sm, a);
          const double w = mass * policy[p2];
          if (w == 0.0) continue;
          for (const auto& [t, p] : mdp.successors(p2))
            reach(pair, t) += w * p;
        }
      }
    }
  }
  return reach;
}

PairVector convex_combine(const PairVector& q1, const PairVector& q2,
                          double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::domain_error("convex_combine: lambda outside [0, 1]");
  if (q1.size() != q2.size())
    throw std::invalid_argument("convex_combine: size mismatch");
  return lambda * q1 + (1.0 - lambda) * q2;
}

BestPolicy best_fixed_policy(const LayeredMdp& mdp,
                             const PairVector& cumulative_loss) {
  if (cumulative_loss.size() != mdp.num_pairs())
    throw std::invalid_argument("loss has wrong size");
  const int ns = mdp.num_states();
  Eigen::VectorXd value = Eigen::VectorXd::Zero(ns);
  BestPolicy best;
  best.actions.assign(ns - 1, 0);
  best.policy = PairVector::Zero(mdp.num_pairs());
  for (int k = mdp.num_layers() - 1; k >= 0; --k) {
    for (int s : mdp.states_in_layer(k)) {
      double best_q = 0.0;
      int best_a = -1;
      for (int a = 0; a < mdp.num_actions(); ++a) {
        const int pair = mdp.pair_index(s, a);
        double qv = cumulative_loss[pair];
        for (const auto& [t, p] : mdp.successors(pair)) qv += p * value[t];
        if (best_a < 0 || qv < best_q) {
          best_q = qv;
          best_a = a;
        }
      }
      value[s] = best_q;
      best.actions[s] = best_a;
      best.policy[mdp.pair_index(s, best_a)] = 1.0;
    }
  }
  best.total_loss = value[mdp.start_state()];
  return best;
}

}  // namespace ftrlmdp
