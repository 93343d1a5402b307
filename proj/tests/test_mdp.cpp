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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "environments.hpp"
#include "mdp.hpp"
#include "test_util.hpp"

using namespace ftrlmdp;
using namespace ftrlmdp::testutil;

namespace {

PairVector diamond_policy(const LayeredMdp& mdp,
                          std::initializer_list<double> probs) {
  PairVector pi(mdp.num_pairs());
  int i = 0;
  for (double p : probs) pi[i++] = p;
  return pi;
}

std::vector<MdpGeneratorConfig> random_instance_configs() {
  std::vector<MdpGeneratorConfig> configs;
  int seed = 100;
  for (int layers : {1, 2, 3}) {
    for (int actions : {2, 3}) {
      MdpGeneratorConfig c;
      c.num_layers = layers;
      c.num_actions = actions;
      c.default_width = 2;
      c.density = layers == 3 ? 0.7 : 1.0;
      c.seed = static_cast<std::uint64_t>(seed++);
      configs.push_back(c);
    }
  }
  return configs;
}

}  // namespace

TEST_CASE("diamond layout and indexing") {
  const LayeredMdp mdp = LayeredMdp::diamond();
  CHECK(mdp.num_layers() == 2);
  CHECK(mdp.num_states() == 4);
  CHECK(mdp.num_actions() == 2);
  CHECK(mdp.num_pairs() == 6);
  CHECK(mdp.state_name(0) == "s0");
  CHECK(mdp.state_name(mdp.terminal_state()) == "s2");
  CHECK(mdp.pair_begin(1) == 2);
  CHECK(mdp.pair_end(1) == 6);
  CHECK(mdp.transition(0, 0, mdp.state_index("u")) == 1.0);
  CHECK(mdp.transition(0, 0, mdp.state_index("v")) == 0.0);
}

TEST_CASE("occupancy from uniform policy on the diamond") {
  const LayeredMdp mdp = LayeredMdp::diamond();
  const PairVector q = occupancy_from_policy(mdp, uniform_policy(mdp));
  CHECK(q[mdp.pair_index(0, 0)] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q[mdp.pair_index(0, 1)] == doctest::Approx(0.5).epsilon(1e-12));
  for (int s : {mdp.state_index("u"), mdp.state_index("v")})
    for (int a = 0; a < 2; ++a)
      CHECK(q[mdp.pair_index(s, a)] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(occupancy_violation(mdp, q) <= 1e-12);
}

TEST_CASE("single-layer occupancy equals the policy row") {
  const LayeredMdp mdp = LayeredMdp::bandit(3);
  Rng rng(7);
  const PairVector pi = random_policy(mdp, rng);
  const PairVector q = occupancy_from_policy(mdp, pi);
  CHECK((q - pi).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("deterministic policy occupancy is the path indicator") {
  const LayeredMdp mdp = LayeredMdp::diamond();
  const PairVector pi = diamond_policy(mdp, {1, 0, 1, 0, 1, 0});
  const PairVector q = occupancy_from_policy(mdp, pi);
  CHECK(q[mdp.pair_index(0, 0)] == 1.0);
  CHECK(q[mdp.pair_index(mdp.state_index("u"), 0)] == 1.0);
  CHECK(q.sum() == doctest::Approx(2.0));
  CHECK(q.lpNorm<1>() == doctest::Approx(2.0));
}

TEST_CASE("policy from occupancy") {
  const LayeredMdp mdp = LayeredMdp::diamond();
  SUBCASE("round trip on the uniform policy") {
    const PairVector q = occupancy_from_policy(mdp, uniform_policy(mdp));
    const PairVector pi = policy_from_occupancy(mdp, q);
    CHECK((pi - uniform_policy(mdp)).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("one-hot normalization") {
    PairVector q = PairVector::Zero(mdp.num_pairs());
    q[mdp.pair_index(0, 0)] = 1.0;
    q[mdp.pair_index(mdp.state_index("u"), 0)] = 0.5;
    q[mdp.pair_index(mdp.state_index("u"), 1)] = 0.0;
    // Not a valid occupancy, but normalization is defined pointwise.
    const PairVector pi = policy_from_occupancy(mdp, q);
    CHECK(pi[mdp.pair_index(mdp.state_index("u"), 0)] == 1.0);
    CHECK(pi[mdp.pair_index(mdp.state_index("u"), 1)] == 0.0);
  }
  SUBCASE("unreached state gets the uniform row") {
    const PairVector det = diamond_policy(mdp, {1, 0, 1, 0, 1, 0});
    const PairVector q = occupancy_from_policy(mdp, det);
    const PairVector pi = policy_from_occupancy(mdp, q);
    const int v = mdp.state_index("v");
    CHECK(pi[mdp.pair_index(v, 0)] == 0.5);
    CHECK(pi[mdp.pair_index(v, 1)] == 0.5);
  }
}

TEST_CASE("round trip recovers full-support policies on random instances") {
  Rng rng(21);
  for (const auto& config : random_instance_configs()) {
    const LayeredMdp mdp = random_layered_mdp(config);
    const PairVector pi = random_policy(mdp, rng);
    const PairVector q = occupancy_from_policy(mdp, pi);
    const Eigen::VectorXd visit = state_visit_probs(mdp, pi);
    const PairVector back = policy_from_occupancy(mdp, q);
    for (int i = 0; i < q.size(); ++i)
      if (visit[mdp.pair_state(i)] > 0.0)
        CHECK(back[i] == doctest::Approx(pi[i]).epsilon(1e-9));
  }
}

TEST_CASE("occupancy_from_policy output always satisfies the constraints") {
  Rng rng(22);
  for (const auto& config : random_instance_configs()) {
    const LayeredMdp mdp = random_layered_mdp(config);
    for (int rep = 0; rep < 20; ++rep)
      CHECK(occupancy_violation(mdp, random_interior_occupancy(mdp, rng)) <=
            1e-12);
  }
}

TEST_CASE("expected loss") {
  const LayeredMdp mdp = LayeredMdp::diamond();
  const PairVector q = occupancy_from_policy(mdp, uniform_policy(mdp));
  CHECK(expected_loss(q, PairVector::Zero(mdp.num_pairs())) == 0.0);
  CHECK(expected_loss(q, PairVector::Ones(mdp.num_pairs())) ==
        doctest::Approx(2.0).epsilon(1e-12));
  PairVector loss = PairVector::Zero(mdp.num_pairs());
  loss[mdp.pair_index(0, 0)] = 1.0;
  CHECK(expected_loss(q, loss) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("trajectory sampling") {
  SUBCASE("deterministic dynamics ignore the seed") {
    const LayeredMdp mdp = LayeredMdp::diamond();
    const PairVector pi = diamond_policy(mdp, {0, 1, 1, 0, 0, 1});
    const PairVector loss = PairVector::Constant(mdp.num_pairs(), 0.25);
    for (std::uint64_t seed : {1ULL, 99ULL, 12345ULL}) {
      Rng rng(seed);
      const Trajectory traj = sample_trajectory(mdp, pi, loss, rng);
      REQUIRE(traj.size() == 2);
      CHECK(traj[0].state == 0);
      CHECK(traj[0].action == 1);
      CHECK(traj[1].state == mdp.state_index("v"));
      CHECK(traj[1].action == 1);
      CHECK(traj[1].loss == 0.25);
    }
  }
  SUBCASE("diamond visit frequencies match the occupancy") {
    const LayeredMdp mdp = LayeredMdp::diamond();
    const PairVector pi = uniform_policy(mdp);
    const PairVector loss = PairVector::Zero(mdp.num_pairs());
    Rng rng(4242);
    const int n = 100000;
    int visits = 0;
    const int u0 = mdp.pair_index(mdp.state_index("u"), 0);
    for (int i = 0; i < n; ++i)
      for (const auto& step : sample_trajectory(mdp, pi, loss, rng))
        if (mdp.pair_index(step.state, step.action) == u0) ++visits;
    const double freq = static_cast<double>(visits) / n;
    const double se = std::sqrt(0.25 * 0.75 / n);
    CHECK(std::abs(freq - 0.25) <= 3.0 * se);
  }
  SUBCASE("bandit action frequencies match the policy") {
    const LayeredMdp mdp = LayeredMdp::bandit(2);
    PairVector pi(2);
    pi << 0.7, 0.3;
    const PairVector loss = PairVector::Zero(2);
    Rng rng(555);
    const int n = 100000;
    int arm0 = 0;
    for (int i = 0; i < n; ++i)
      if (sample_trajectory(mdp, pi, loss, rng)[0].action == 0) ++arm0;
    const double freq = static_cast<double>(arm0) / n;
    CHECK(std::abs(freq - 0.7) <= 3.0 * std::sqrt(0.7 * 0.3 / n));
  }
}

TEST_CASE("reachability probabilities") {
  const LayeredMdp mdp = LayeredMdp::diamond();
  const PairVector pi = uniform_policy(mdp);
  const Eigen::MatrixXd reach = reachability(mdp, pi);
  SUBCASE("next layer equals the kernel") {
    CHECK(reach(mdp.pair_index(0, 0), mdp.state_index("u")) == 1.0);
    CHECK(reach(mdp.pair_index(0, 0), mdp.state_index("v")) == 0.0);
    CHECK(reach(mdp.pair_index(0, 1), mdp.state_index("v")) == 1.0);
  }
  SUBCASE("no backward reachability") {
    for (int pair = 0; pair < mdp.num_pairs(); ++pair)
      for (int s = 0; s < mdp.num_states(); ++s)
        if (mdp.layer_of(s) <= mdp.layer_of(mdp.pair_state(pair)))
          CHECK(reach(pair, s) == 0.0);
  }
  SUBCASE("terminal funnel") {
    CHECK(reach(mdp.pair_index(0, 0), mdp.terminal_state()) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("layer sums stay below one on random instances") {
    Rng rng(31);
    for (const auto& config : random_instance_configs()) {
      const LayeredMdp rmdp = random_layered_mdp(config);
      const Eigen::MatrixXd r = reachability(rmdp, random_policy(rmdp, rng));
      for (int pair = 0; pair < rmdp.num_pairs(); ++pair) {
        double total = 0.0;
        for (int k = 0; k <= rmdp.num_layers(); ++k) {
          double layer_sum = 0.0;
          for (int s : rmdp.states_in_layer(k)) layer_sum += r(pair, s);
          CHECK(layer_sum <= 1.0 + 1e-9);
          if (k < rmdp.num_layers()) total += layer_sum;
        }
        CHECK(total <= rmdp.num_layers() + 1e-9);
      }
    }
  }
}

TEST_CASE("convex combinations") {
  const LayeredMdp mdp = LayeredMdp::diamond();
  const PairVector q1 =
      occupancy_from_policy(mdp, diamond_policy(mdp, {1, 0, 1, 0, 1, 0}));
  const PairVector q2 =
      occupancy_from_policy(mdp, diamond_policy(mdp, {0, 1, 0, 1, 0, 1}));
  CHECK((convex_combine(q1, q2, 1.0) - q1).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((convex_combine(q1, q2, 0.0) - q2).lpNorm<Eigen::Infinity>() == 0.0);
  const PairVector mid = convex_combine(q1, q2, 0.5);
  CHECK(mid[mdp.pair_index(0, 0)] == 0.5);
  CHECK(mid[mdp.pair_index(mdp.state_index("u"), 0)] == 0.5);
  CHECK(mid[mdp.pair_index(mdp.state_index("v"), 1)] == 0.5);
  CHECK(occupancy_violation(mdp, mid) <= 1e-12);
  CHECK_THROWS_AS(convex_combine(q1, q2, 1.2), std::domain_error);
  CHECK_THROWS_AS(convex_combine(q1, q2, -0.1), std::domain_error);
}

TEST_CASE("polytope is closed under convex combinations (1000 draws)") {
  Rng rng(77);
  const auto configs = random_instance_configs();
  for (int rep = 0; rep < 1000; ++rep) {
    const auto& config = configs[rep % configs.size()];
    const LayeredMdp mdp = random_layered_mdp(config);
    const PairVector q1 = random_interior_occupancy(mdp, rng, 0.05);
    const PairVector q2 = random_interior_occupancy(mdp, rng, 0.05);
    const double lambda = rep % 7 == 0 ? (rep % 2) : rng.uniform();
    CHECK(occupancy_violation(mdp, convex_combine(q1, q2, lambda)) <= 1e-9);
  }
}

TEST_CASE("best fixed policy") {
  SUBCASE("bandit argmin") {
    const LayeredMdp mdp = LayeredMdp::bandit(3);
    PairVector loss(3);
    loss << 3.0, 1.0, 2.0;
    const BestPolicy best = best_fixed_policy(mdp, loss);
    CHECK(best.actions[0] == 1);
    CHECK(best.total_loss == 1.0);
  }
  SUBCASE("ties break toward the lowest action index") {
    const LayeredMdp mdp = LayeredMdp::diamond();
    const BestPolicy best =
        best_fixed_policy(mdp, PairVector::Constant(mdp.num_pairs(), 0.7));
    for (int a : best.actions) CHECK(a == 0);
  }
  SUBCASE("diamond routes through the cheap branch") {
    const LayeredMdp mdp = LayeredMdp::diamond();
    PairVector loss = PairVector::Zero(mdp.num_pairs());
    loss[mdp.pair_index(0, 0)] = 1.0;
    loss[mdp.pair_index(0, 1)] = 0.0;
    loss[mdp.pair_index(mdp.state_index("v"), 0)] = 5.0;
    loss[mdp.pair_index(mdp.state_index("v"), 1)] = 5.0;
    const BestPolicy best = best_fixed_policy(mdp, loss);
    CHECK(best.actions[0] == 0);  // go to u despite the immediate cost
    CHECK(best.total_loss == doctest::Approx(1.0));
    CHECK(best.total_loss ==
          doctest::Approx(brute_force_best_value(mdp, loss)));
  }
  SUBCASE("matches exhaustive enumeration on random instances") {
    Rng rng(913);
    for (const auto& config : random_instance_configs()) {
      const LayeredMdp mdp = random_layered_mdp(config);
      if (mdp.num_states() > 8) continue;
      for (int rep = 0; rep < 10; ++rep) {
        PairVector loss(mdp.num_pairs());
        for (int i = 0; i < loss.size(); ++i) loss[i] = 10.0 * rng.uniform();
        CHECK(best_fixed_policy(mdp, loss).total_loss ==
              doctest::Approx(brute_force_best_value(mdp, loss))
                  .epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("mdp text format") {
  const std::string text = R"(# diamond
layers 2
actions 2
state s0 layer 0
state u layer 1
state v layer 1
state s2 layer 2
trans s0 0 u 1.0
trans s0 1 v 1.0
trans u 0 s2 1.0
trans u 1 s2 1.0
trans v 0 s2 1.0
trans v 1 s2 1.0
)";
  const LayeredMdp mdp = LayeredMdp::parse(text);
  CHECK(mdp.num_layers() == 2);
  CHECK(mdp.num_pairs() == 6);
  CHECK(mdp.transition(mdp.state_index("s0"), 1, mdp.state_index("v")) == 1.0);

  SUBCASE("row sums must reach one") {
    CHECK_THROWS_WITH_AS(
        LayeredMdp::parse("layers 1\nactions 1\nstate a layer 0\nstate b "
                          "layer 1\ntrans a 0 b 0.5\n"),
        doctest::Contains("sum"), std::invalid_argument);
  }
  SUBCASE("unreachable states are rejected") {
    CHECK_THROWS_WITH_AS(
        LayeredMdp::parse(
            "layers 2\nactions 1\nstate a layer 0\nstate b layer 1\nstate c "
            "layer 1\nstate d layer 2\ntrans a 0 b 1.0\ntrans b 0 d "
            "1.0\ntrans c 0 d 1.0\n"),
        doctest::Contains("unreachable"), std::invalid_argument);
  }
  SUBCASE("layer-skipping transitions are rejected") {
    CHECK_THROWS_AS(
        LayeredMdp::parse("layers 2\nactions 1\nstate a layer 0\nstate b "
                          "layer 1\nstate c layer 2\ntrans a 0 c 1.0\ntrans "
                          "b 0 c 1.0\n"),
        std::invalid_argument);
  }
  SUBCASE("singleton first and last layers are required") {
    CHECK_THROWS_AS(
        LayeredMdp::parse("layers 1\nactions 1\nstate a layer 0\nstate b "
                          "layer 0\nstate c layer 1\ntrans a 0 c 1.0\ntrans "
                          "b 0 c 1.0\n"),
        std::invalid_argument);
  }
  SUBCASE("unknown states are rejected") {
    CHECK_THROWS_AS(LayeredMdp::parse("layers 1\nactions 1\nstate a layer "
                                      "0\nstate b layer 1\ntrans a 0 zz 1\n"),
                    std::invalid_argument);
  }
}
