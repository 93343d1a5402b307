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
// The hybrid regularizer over occupancy measures:
//
//   psi_t(q) = (1/eta_t) * phi_H(q) + phi_L(q)
//   phi_H(q) = -sum_{s,a} (sqrt(q(s,a)) + alpha * sqrt(q(s) - q(s,a)))
//   phi_L(q) = beta * sum_{s,a} log(1/q(s,a))
//
// with eta_t = gamma / sqrt(t). Everywhere in this module the state
// marginal q(s) is computed through the transition kernel,
// q(s) = sum_{s',a'} P(s|s',a') q(s',a'), not as sum_a q(s,a). The two
// agree on the occupancy polytope, but only the transition form gives
// phi_H a layered Hessian that stays correct off the polytope (which the
// finite-difference checks rely on).

#ifndef FTRLMDP_SRC_REGULARIZER_HPP_
#define FTRLMDP_SRC_REGULARIZER_HPP_

#include <Eigen/Core>
#include <vector>

#include "linalg.hpp"
#include "mdp.hpp"

namespace ftrlmdp {

struct RegularizerParams {
  double alpha = 0.0;  // weight of the complement Tsallis term
  double beta = 0.0;   // log-barrier weight
  double gamma = 1.0;  // learning-rate scale, eta_t = gamma / sqrt(t)

  // alpha = 1/sqrt(|A|), beta = 64 L, gamma = 1.
  static RegularizerParams theorem1(const LayeredMdp& mdp);
  // The alternate tuning that optimizes the gap-dependent bound:
  // alpha = ((|A|+L) / (2|A|^2 L^4))^{1/4},
  // gamma = ((|A|+L) / (|A| (64 e)^2 L^5))^{1/4}, beta = 64 L.
  static RegularizerParams stochastic_tuned(const LayeredMdp& mdp);

  double learning_rate(int t) const;      // eta_t
  double inverse_learning_rate(int t) const;  // sqrt(t) / gamma
  void validate() const;                  // all three must be > 0
};

// Transition-based state marginals; marginal of the start state is 1.
Eigen::VectorXd state_marginals(const LayeredMdp& mdp, const PairVector& q);

// The same linear map without the start-state constant: h(s) of Eq-style
// quadratic forms, and the directional change of the marginals along a
// step direction.
Eigen::VectorXd kernel_pushforward(const LayeredMdp& mdp,
                                   const PairVector& w);

// Throws std::domain_error unless every q(s,a) and every complement
// q(s) - q(s,a) is at least kInteriorEps. A one-action MDP has identically
// zero complements, so it is rejected here: with |A| = 1 there is no
// decision to regularize.
void require_interior(const LayeredMdp& mdp, const PairVector& q);

// phi_H. Finite on the whole polytope including its boundary (sqrt(0) = 0),
// so it accepts any nonnegative q; negative entries are a domain error.
double hybrid_regularizer(const LayeredMdp& mdp, const PairVector& q,
                          double alpha);

// phi_L; beta = 0 yields 0 regardless of q, otherwise nonpositive entries
// are a domain error.
double log_barrier(const PairVector& q, double beta);

// Exact gradient of phi_H at interior q (under the transition-based
// marginals).
PairVector hybrid_gradient(const LayeredMdp& mdp, const PairVector& q,
                           double alpha);

// Gradient of psi_t = (1/eta_t) phi_H + phi_L at interior q.
PairVector regularizer_gradient(const LayeredMdp& mdp, const PairVector& q,
                                const RegularizerParams& params, int t);

// w^T hess(phi_H)(q) w evaluated matrix-free in O(pairs + transitions):
//   (1/4) sum_{s,a} [ w(s,a)^2 / q(s,a)^{3/2}
//                     + alpha (h(s) - w(s,a))^2 / (q(s)-q(s,a))^{3/2} ]
// where h(s) pushes w forward through the kernel.
double hessian_quadratic_form(const LayeredMdp& mdp, const PairVector& q,
                              const PairVector& w, double alpha);

// Dense Hessian of phi_H assembled entry by entry. Diagnostics/test path;
// production code uses the quadratic form or the layer blocks below.
Eigen::MatrixXd hessian_dense(const LayeredMdp& mdp, const PairVector& q,
                              double alpha);

// Hessian of phi_H in its natural block-tridiagonal layer structure.
LayerBlockMatrix hybrid_hessian_blocks(const LayeredMdp& mdp,
                                       const PairVector& q, double alpha);

// Layer-recursive inverse of the phi_H Hessian:
//   W_k = (C_k^{-1} + D_k^{-1} + P_k^T N_{k-1} P_k)^{-1}
//   N_k = D_k^{-1} - D_k^{-1} W_k D_k^{-1},   N_0 = (C_0 + D_0)^{-1}
// where C_k, D_k hold the complement and plain Tsallis curvature of layer k
// and P_k maps layer k-1 pairs to layer k pairs. N_k dominates the
// corresponding diagonal block of the Hessian inverse.
struct LayeredInverse {
  std::vector<Eigen::MatrixXd> n_blocks;   // N_k, one per layer
  std::vector<Eigen::MatrixXd> w_blocks;   // W_k for k >= 1
  std::vector<Eigen::VectorXd> c_diag;     // diag of C_k
  std::vector<Eigen::VectorXd> d_diag;     // diag of D_k
  Eigen::MatrixXd m_full;                  // M_{L-1}, reassembled dense
  Eigen::VectorXd r_diag;                  // R(s,a) = N_k((s,a),(s,a))
  // Worst signed eigenvalue margins of the two dominations
  // N_k <= D_k^{-1} and N_k <= C_k^{-1} + P_k^T N_{k-1} P_k (>= 0 means a
  // violation of that size).
  double domination_violation = 0.0;
};

// Builds the recursion and verifies: each N_k is positive definite, both
// dominations hold to 1e-8, and (for instances with at most 64 pairs)
// M_{L-1} reproduces the dense Hessian to relative 1e-8. Violations and
// singular intermediates throw with the offending layer index.
LayeredInverse layered_inverse(const LayeredMdp& mdp, const PairVector& q,
                               double alpha);

// estimate^T H^{-1} estimate for H = hess(phi_H)(q), via the layered
// factorization. Nonnegative; throws SingularLayerError if a pivot block
// fails.
double stability_norm(const LayeredMdp& mdp, const PairVector& q,
                      const PairVector& estimate, double alpha);

}  // namespace ftrlmdp

#endif  // FTRLMDP_SRC_REGULARIZER_HPP_
