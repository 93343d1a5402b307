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
//
// Shared test oracles. Everything here is independent of the production
// code paths it is used to check: brute-force policy enumeration, central
// finite differences, and plain random draws.

#ifndef FTRLMDP_TESTS_TEST_UTIL_HPP_
#define FTRLMDP_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <functional>
#include <vector>

#include "mdp.hpp"

namespace ftrlmdp::testutil {

// Random stochastic policy; `uniform_mix` in (0, 1] bounds every entry away
// from zero by uniform_mix / |A|.
inline PairVector random_policy(const LayeredMdp& mdp, Rng& rng,
                                double uniform_mix = 0.2) {
  PairVector pi(mdp.num_pairs());
  const int m = mdp.num_actions();
  for (int s = 0; s < mdp.num_states() - 1; ++s) {
    double sum = 0.0;
    for (int a = 0; a < m; ++a) {
      const double w = -std::log(1.0 - rng.uniform());
      pi[mdp.pair_index(s, a)] = w;
      sum += w;
    }
    for (int a = 0; a < m; ++a) {
      const int i = mdp.pair_index(s, a);
      pi[i] = (1.0 - uniform_mix) * pi[i] / sum + uniform_mix / m;
    }
  }
  return pi;
}

inline PairVector random_interior_occupancy(const LayeredMdp& mdp, Rng& rng,
                                            double uniform_mix = 0.2) {
  return occupancy_from_policy(mdp, random_policy(mdp, rng, uniform_mix));
}

// All |A|^(|S|-1) deterministic policies as one-hot pair vectors.
inline std::vector<PairVector> enumerate_deterministic_policies(
    const LayeredMdp& mdp) {
  const int ns = mdp.num_states() - 1;
  const int m = mdp.num_actions();
  std::vector<PairVector> out;
  std::vector<int> choice(ns, 0);
  while (true) {
    PairVector pi = PairVector::Zero(mdp.num_pairs());
    for (int s = 0; s < ns; ++s) pi[mdp.pair_index(s, choice[s])] = 1.0;
    out.push_back(std::move(pi));
    int s = 0;
    while (s < ns && ++choice[s] == m) choice[s++] = 0;
    if (s == ns) break;
  }
  return out;
}

// Brute-force optimum of <q^pi, loss> over deterministic policies.
inline double brute_force_best_value(const LayeredMdp& mdp,
                                     const PairVector& loss) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& pi : enumerate_deterministic_policies(mdp))
    best = std::min(best,
                    expected_loss(occupancy_from_policy(mdp, pi), loss));
  return best;
}

inline double central_difference(const std::function<double(double)>& f,
                                 double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Gradient of f at x by central differences, one coordinate at a time.
inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Hessian of f at x by second-order central differences.
inline Eigen::MatrixXd fd_hessian(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd hess(n, n);
  const double f0 = f(x);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double v;
      if (i == j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        v = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
      } else {
        Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
        xpp[i] += h; xpp[j] += h;
        xpm[i] += h; xpm[j] -= h;
        xmp[i] -= h; xmp[j] += h;
        xmm[i] -= h; xmm[j] -= h;
        v = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
      }
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

}  // namespace ftrlmdp::testutil

#endif  // FTRLMDP_TESTS_TEST_UTIL_HPP_
