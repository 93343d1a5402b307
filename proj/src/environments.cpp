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

#include "environments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ftrlmdp {

namespace {

constexpr std::uint64_t kLossDomain = 0x10552u;
constexpr std::uint64_t kPlacementDomain = 0xC0552u;

double clip01(double x) { return std::min(1.0, std::max(0.0, x)); }

void check_means(const PairVector& means) {
  for (int i = 0; i < means.size(); ++i)
    if (means[i] < 0.0 || means[i] > 1.0)
      throw std::invalid_argument("mean losses must lie in [0, 1]");
}

}  // namespace

StochasticEnv::StochasticEnv(PairVector means, NoiseKind noise, double width,
                             std::uint64_t seed)
    : means_(std::move(means)), noise_(noise), width_(width), seed_(seed) {
  check_means(means_);
  if (width_ < 0.0) throw std::invalid_argument("noise width must be >= 0");
}

PairVector StochasticEnv::losses(int t,
                                 const std::vector<PairVector>& /*history*/) {
  Rng rng(derive_stream(seed_, kLossDomain, static_cast<std::uint64_t>(t)));
  PairVector loss(means_.size());
  for (int i = 0; i < loss.size(); ++i) {
    if (noise_ == NoiseKind::kBernoulli) {
      loss[i] = rng.bernoulli(means_[i]) ? 1.0 : 0.0;
    } else {
      loss[i] = width_ == 0.0
                    ? means_[i]
                    : clip01(means_[i] + rng.uniform(-width_, width_));
    }
  }
  return loss;
}

SwitchingAdversaryEnv::SwitchingAdversaryEnv(PairVector table_a,
                                             PairVector table_b,
                                             int phase_length, Pattern pattern,
                                             std::uint64_t pattern_seed)
    : table_a_(std::move(table_a)),
      table_b_(std::move(table_b)),
      phase_length_(phase_length),
      pattern_(pattern),
      pattern_seed_(pattern_seed) {
  check_means(table_a_);
  check_means(table_b_);
  if (table_a_.size() != table_b_.size())
    throw std::invalid_argument("phase tables must have equal sizes");
  if (phase_length_ < 1)
    throw std::invalid_argument("phase length must be >= 1");
}

bool SwitchingAdversaryEnv::phase_uses_a(int phase) const {
  switch (pattern_) {
    case Pattern::kAlternate:
      return phase % 2 == 0;
    case Pattern::kRandom:
      return (mix64(pattern_seed_ ^ mix64(static_cast<std::uint64_t>(phase) +
                                          1)) &
              1ULL) == 0;
    case Pattern::kSqrtBalance: {
      // Greedy signs keeping the running sum near sqrt(i+1): the cumulative
      // advantage of table A over table B then grows like sqrt(t).
      if (static_cast<int>(sign_cache_.size()) <= phase) {
        int w = 0;
        for (const signed char s : sign_cache_) w += s;
        for (int i = static_cast<int>(sign_cache_.size()); i <= phase; ++i) {
          const signed char s =
              w < std::sqrt(static_cast<double>(i + 1)) ? 1 : -1;
          sign_cache_.push_back(s);
          w += s;
        }
      }
      return sign_cache_[phase] > 0;
    }
  }
  return true;
}

PairVector SwitchingAdversaryEnv::losses(
    int t, const std::vector<PairVector>& /*history*/) {
  const int phase = (t - 1) / phase_length_;
  return phase_uses_a(phase) ? table_a_ : table_b_;
}

AdaptiveAdversaryEnv::AdaptiveAdversaryEnv(const LayeredMdp* mdp, double low,
                                           double high)
    : mdp_(mdp), low_(low), high_(high) {
  if (!(0.0 <= low && low <= high && high <= 1.0))
    throw std::invalid_argument("need 0 <= low <= high <= 1");
}

PairVector AdaptiveAdversaryEnv::losses(
    int /*t*/, const std::vector<PairVector>& history) {
  const double mid = 0.5 * (low_ + high_);
  if (history.empty())
    return PairVector::Constant(mdp_->num_pairs(), mid);
  const PairVector& q = history.back();
  PairVector loss = PairVector::Constant(mdp_->num_pairs(), low_);
  for (int s = 0; s < mdp_->num_states() - 1; ++s) {
    int modal = 0;
    for (int a = 1; a < mdp_->num_actions(); ++a)
      if (q[mdp_->pair_index(s, a)] > q[mdp_->pair_index(s, modal)])
        modal = a;
    loss[mdp_->pair_index(s, modal)] = high_;
  }
  return loss;
}

CorruptedEnv::CorruptedEnv(const LayeredMdp* mdp, PairVector base_means,
                           NoiseKind noise, double width, std::uint64_t seed,
                           double budget, Placement placement, int horizon)
    : mdp_(mdp),
      base_(base_means, noise, width, seed),
      budget_(budget),
      placement_(placement),
      seed_(seed),
      horizon_(horizon) {
  if (budget_ < 0.0) throw std::invalid_argument("budget must be >= 0");
  if (horizon_ < 1) throw std::invalid_argument("horizon must be >= 1");
  pi_star_ = gap_function(*mdp, base_means).pi_star;
}

PairVector CorruptedEnv::losses(int t,
                                const std::vector<PairVector>& history) {
  if (t != last_t_ + 1)
    throw std::logic_error(
        "corrupted environment must be queried sequentially");
  last_t_ = t;
  PairVector loss = base_.losses(t, history);
  if (budget_exhausted_ || budget_ <= 0.0) return loss;

  bool corrupt_now = false;
  if (placement_ == Placement::kFront) {
    corrupt_now = true;  // corrupt from the start until the budget runs out
  } else {
    // Each episode corrupted with probability matching the expected number
    // of fully flipped episodes under the front-loaded scheme.
    const double per_episode = 2.0 * mdp_->num_layers();
    const double p =
        std::min(1.0, budget_ / per_episode / static_cast<double>(horizon_));
    Rng rng(derive_stream(seed_, kPlacementDomain,
                          static_cast<std::uint64_t>(t)));
    corrupt_now = rng.bernoulli(p);
  }
  if (!corrupt_now) return loss;

  // Full flip toward the worst action: the base-optimal action looks
  // maximally bad, everything else free.
  PairVector flipped(loss.size());
  for (int i = 0; i < loss.size(); ++i)
    flipped[i] =
        mdp_->pair_action(i) == pi_star_[mdp_->pair_state(i)] ? 1.0 : 0.0;

  // Budget charge for a candidate realized loss.
  auto charge = [&](const PairVector& realized) {
    double c = 0.0;
    for (int k = 0; k < mdp_->num_layers(); ++k) {
      double worst = 0.0;
      for (int i = mdp_->pair_begin(k); i < mdp_->pair_end(k); ++i)
        worst = std::max(worst, std::abs(realized[i] - loss[i]));
      c += worst;
    }
    return 2.0 * c;
  };

  const double full_cost = charge(flipped);
  const double remaining = budget_ - consumed_;
  if (full_cost <= remaining) {
    consumed_ += full_cost;
    return flipped;
  }
  // Partial flip exhausting the budget exactly; scaling the deviation
  // scales the charge linearly.
  const double lambda = full_cost > 0.0 ? remaining / full_cost : 0.0;
  PairVector partial = loss + lambda * (flipped - loss);
  consumed_ += lambda * full_cost;
  budget_exhausted_ = true;
  return partial;
}

GapInfo gap_function(const LayeredMdp& mdp, const PairVector& mean_losses) {
  check_means(mean_losses);
  GapInfo info;
  info.q_values = PairVector::Zero(mdp.num_pairs());
  info.delta = PairVector::Zero(mdp.num_pairs());
  info.pi_star.assign(mdp.num_states() - 1, 0);
  info.pi_star_policy = PairVector::Zero(mdp.num_pairs());
  info.min_gap = 1.0;
  Eigen::VectorXd value = Eigen::VectorXd::Zero(mdp.num_states());
  for (int k = mdp.num_layers() - 1; k >= 0; --k) {
    for (int s : mdp.states_in_layer(k)) {
      int best = -1;
      for (int a = 0; a < mdp.num_actions(); ++a) {
        const int pair = mdp.pair_index(s, a);
        double qv = mean_losses[pair];
        for (const auto& [t, p] : mdp.successors(pair)) qv += p * value[t];
        info.q_values[pair] = qv;
        if (best < 0 || qv < info.q_values[mdp.pair_index(s, best)]) best = a;
      }
      const double best_q = info.q_values[mdp.pair_index(s, best)];
      for (int a = 0; a < mdp.num_actions(); ++a) {
        if (a == best) continue;
        const double gap = info.q_values[mdp.pair_index(s, a)] - best_q;
        if (gap <= kStructuralTol)
          throw std::domain_error("gap condition violated: state " +
                                  mdp.state_name(s) +
                                  " has a non-unique optimal action");
        info.delta[mdp.pair_index(s, a)] = gap;
        info.min_gap = std::min(info.min_gap, gap);
      }
      info.pi_star[s] = best;
      info.pi_star_policy[mdp.pair_index(s, best)] = 1.0;
      value[s] = best_q;
    }
  }
  return info;
}

LayeredMdp random_layered_mdp(const MdpGeneratorConfig& config) {
  if (config.num_layers < 1 || config.num_actions < 1)
    throw std::invalid_argument("generator needs layers >= 1, actions >= 1");
  if (config.density <= 0.0 || config.density > 1.0)
    throw std::invalid_argument("density must be in (0, 1]");
  Rng rng(derive_stream(config.seed, 0x6e4, 0));

  MdpSpec spec;
  spec.num_layers = config.num_layers;
  spec.num_actions = config.num_actions;
  std::vector<std::vector<int>> layer_states(config.num_layers + 1);
  for (int k = 0; k <= config.num_layers; ++k) {
    int width = 1;
    if (k > 0 && k < config.num_layers) {
      width = k - 1 < static_cast<int>(config.widths.size())
                  ? config.widths[k - 1]
                  : config.default_width;
      if (width < 1) throw std::invalid_argument("layer width must be >= 1");
    }
    for (int i = 0; i < width; ++i) {
      layer_states[k].push_back(static_cast<int>(spec.state_names.size()));
      spec.state_names.push_back("s" + std::to_string(k) + "_" +
                                 std::to_string(i));
      spec.state_layers.push_back(k);
    }
  }

  for (int k = 0; k < config.num_layers; ++k) {
    const auto& next = layer_states[k + 1];
    const int support =
        std::max(1, static_cast<int>(std::ceil(config.density * next.size())));
    std::vector<char> covered(next.size(), 0);
    struct Row {
      int state, action;
      std::vector<int> targets;
    };
    std::vector<Row> rows;
    for (int s : layer_states[k]) {
      for (int a = 0; a < config.num_actions; ++a) {
        Row row{s, a, {}};
        std::vector<int> perm(next.size());
        for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
        for (size_t i = perm.size(); i > 1; --i)
          std::swap(perm[i - 1],
                    perm[static_cast<size_t>(rng.uniform() * i)]);
        for (int i = 0; i < support; ++i) {
          row.targets.push_back(perm[i]);
          covered[perm[i]] = 1;
        }
        rows.push_back(std::move(row));
      }
    }
    // Patch coverage so every next-layer state is reachable.
    for (size_t j = 0; j < covered.size(); ++j) {
      if (covered[j]) continue;
      auto& row = rows[static_cast<size_t>(rng.uniform() * rows.size())];
      row.targets.push_back(static_cast<int>(j));
      covered[j] = 1;
    }
    for (const auto& row : rows) {
      std::vector<double> weights(row.targets.size());
      double sum = 0.0;
      for (auto& w : weights) {
        w = 0.2 + rng.uniform();  // bounded away from zero
        sum += w;
      }
      for (size_t i = 0; i < row.targets.size(); ++i)
        spec.edges.push_back({row.state, row.action, next[row.targets[i]],
                              weights[i] / sum});
    }
  }
  return LayeredMdp(spec);
}

}  // namespace ftrlmdp
