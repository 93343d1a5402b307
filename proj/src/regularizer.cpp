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

#include "regularizer.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ftrlmdp {

namespace {

// Complements q(s) - q(s,a) under the transition-based marginals. Tiny
// negative values (roundoff at the boundary) are clamped to zero; anything
// below -tol is a domain error.
Eigen::VectorXd complements(const LayeredMdp& mdp, const PairVector& q,
                            double tol) {
  const Eigen::VectorXd marg = state_marginals(mdp, q);
  Eigen::VectorXd comp(mdp.num_pairs());
  for (int i = 0; i < comp.size(); ++i) {
    const double c = marg[mdp.pair_state(i)] - q[i];
    if (c < -tol)
      throw std::domain_error("regularizer: negative complement " +
                              std::to_string(c));
    comp[i] = c < 0.0 ? 0.0 : c;
  }
  return comp;
}

}  // namespace

RegularizerParams RegularizerParams::theorem1(const LayeredMdp& mdp) {
  RegularizerParams p;
  p.alpha = 1.0 / std::sqrt(static_cast<double>(mdp.num_actions()));
  p.beta = 64.0 * mdp.num_layers();
  p.gamma = 1.0;
  return p;
}

RegularizerParams RegularizerParams::stochastic_tuned(const LayeredMdp& mdp) {
  const double m = mdp.num_actions();
  const double length = mdp.num_layers();
  RegularizerParams p;
  p.alpha = std::pow((m + length) / (2.0 * m * m * std::pow(length, 4)), 0.25);
  p.beta = 64.0 * length;
  const double c = 64.0 * std::exp(1.0);
  p.gamma =
      std::pow((m + length) / (m * c * c * std::pow(length, 5)), 0.25);
  return p;
}

double RegularizerParams::learning_rate(int t) const {
  return gamma / std::sqrt(static_cast<double>(t));
}

double RegularizerParams::inverse_learning_rate(int t) const {
  return std::sqrt(static_cast<double>(t)) / gamma;
}

void RegularizerParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument(
        "regularizer params must all be strictly positive");
}

Eigen::VectorXd state_marginals(const LayeredMdp& mdp, const PairVector& q) {
  Eigen::VectorXd marg = kernel_pushforward(mdp, q);
  marg[mdp.start_state()] = 1.0;
  return marg;
}

Eigen::VectorXd kernel_pushforward(const LayeredMdp& mdp,
                                   const PairVector& w) {
  if (w.size() != mdp.num_pairs())
    throw std::invalid_argument("pair vector has wrong size");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mdp.num_states());
  for (int i = 0; i < w.size(); ++i)
    for (const auto& [t, p] : mdp.successors(i)) out[t] += w[i] * p;
  return out;
}

void require_interior(const LayeredMdp& mdp, const PairVector& q) {
  if (mdp.num_actions() < 2)
    throw std::domain_error(
        "regularizer needs at least two actions; a one-action MDP has no "
        "decision to regularize");
  if (q.size() != mdp.num_pairs())
    throw std::invalid_argument("occupancy has wrong size");
  const Eigen::VectorXd marg = state_marginals(mdp, q);
  for (int i = 0; i < q.size(); ++i) {
    if (q[i] < kInteriorEps)
      throw std::domain_error("occupancy is not interior: q(" +
                              mdp.state_name(mdp.pair_state(i)) + "," +
                              std::to_string(mdp.pair_action(i)) + ") = " +
                              std::to_string(q[i]));
    if (marg[mdp.pair_state(i)] - q[i] < kInteriorEps)
      throw std::domain_error("occupancy is not interior: complement at (" +
                              mdp.state_name(mdp.pair_state(i)) + "," +
                              std::to_string(mdp.pair_action(i)) +
                              ") is below threshold");
  }
}

double hybrid_regularizer(const LayeredMdp& mdp, const PairVector& q,
                          double alpha) {
  if (q.size() != mdp.num_pairs())
    throw std::invalid_argument("occupancy has wrong size");
  for (int i = 0; i < q.size(); ++i)
    if (q[i] < -kInteriorEps)
      throw std::domain_error("hybrid regularizer: negative occupancy entry");
  const Eigen::VectorXd comp = complements(mdp, q, kDerivedTol);
  double value = 0.0;
  for (int i = 0; i < q.size(); ++i)
    value += std::sqrt(std::max(q[i], 0.0)) + alpha * std::sqrt(comp[i]);
  return -value;
}

double log_barrier(const PairVector& q, double beta) {
  if (beta == 0.0) return 0.0;
  double value = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0)
      throw std::domain_error("log barrier: nonpositive occupancy entry");
    value -= std::log(q[i]);
  }
  return beta * value;
}

PairVector hybrid_gradient(const LayeredMdp& mdp, const PairVector& q,
                           double alpha) {
  require_interior(mdp, q);
  const Eigen::VectorXd comp = complements(mdp, q, kDerivedTol);
  PairVector grad(q.size());
  // Per-state sum of alpha / (2 sqrt(comp)) over the next layer's pairs,
  // pulled back through the kernel.
  Eigen::VectorXd next_pull = Eigen::VectorXd::Zero(mdp.num_states());
  for (int s = 0; s < mdp.num_states() - 1; ++s) {
    if (mdp.layer_of(s) == 0) continue;
    double acc = 0.0;
    for (int a = 0; a < mdp.num_actions(); ++a)
      acc += alpha / (2.0 * std::sqrt(comp[mdp.pair_index(s, a)]));
    next_pull[s] = acc;
  }
  for (int i = 0; i < q.size(); ++i) {
    double g = -1.0 / (2.0 * std::sqrt(q[i])) +
               alpha / (2.0 * std::sqrt(comp[i]));
    for (const auto& [t, p] : mdp.successors(i)) g -= p * next_pull[t];
    grad[i] = g;
  }
  return grad;
}

PairVector regularizer_gradient(const LayeredMdp& mdp, const PairVector& q,
                                const RegularizerParams& params, int t) {
  params.validate();
  const double inv_eta = params.inverse_learning_rate(t);
  PairVector grad = inv_eta * hybrid_gradient(mdp, q, params.alpha);
  for (int i = 0; i < q.size(); ++i) grad[i] -= params.beta / q[i];
  return grad;
}

double hessian_quadratic_form(const LayeredMdp& mdp, const PairVector& q,
                              const PairVector& w, double alpha) {
  require_interior(mdp, q);
  if (w.size() != q.size())
    throw std::invalid_argument("direction has wrong size");
  const Eigen::VectorXd comp = complements(mdp, q, kDerivedTol);
  // h(s): pushforward of w through the kernel; zero at the start state.
  const Eigen::VectorXd h = kernel_pushforward(mdp, w);
  double total = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    const double hs = h[mdp.pair_state(i)];
    total += w[i] * w[i] / std::pow(q[i], 1.5) +
             alpha * (hs - w[i]) * (hs - w[i]) / std::pow(comp[i], 1.5);
  }
  return 0.25 * total;
}

Eigen::MatrixXd hessian_dense(const LayeredMdp& mdp, const PairVector& q,
                              double alpha) {
  require_interior(mdp, q);
  const Eigen::VectorXd comp = complements(mdp, q, kDerivedTol);
  const int n = mdp.num_pairs();
  const int m = mdp.num_actions();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    hess(i, i) = 0.25 / std::pow(q[i], 1.5) +
                 0.25 * alpha / std::pow(comp[i], 1.5);
  // Cross-layer entries and same-layer aggregation through the next layer's
  // complement curvature c(s'',a'') = alpha / (4 comp^{3/2}).
  for (int i = 0; i < n; ++i) {
    for (const auto& [t, pt] : mdp.successors(i)) {
      if (t == mdp.terminal_state()) continue;
      for (int a2 = 0; a2 < m; ++a2) {
        const int j = mdp.pair_index(t, a2);
        const double c = 0.25 * alpha / std::pow(comp[j], 1.5);
        hess(i, j) -= pt * c;
        hess(j, i) -= pt * c;
        // Same-layer term: pair i with every pair i2 of the same layer that
        // also reaches t (including i itself, which lands on the diagonal).
        for (int i2 = mdp.pair_begin(mdp.layer_of(mdp.pair_state(i)));
             i2 < mdp.pair_end(mdp.layer_of(mdp.pair_state(i))); ++i2) {
          const double p2 = mdp.transition(mdp.pair_state(i2),
                                           mdp.pair_action(i2), t);
          if (p2 == 0.0) continue;
          hess(i, i2) += pt * p2 * c;
        }
      }
    }
  }
  return hess;
}

LayerBlockMatrix hybrid_hessian_blocks(const LayeredMdp& mdp,
                                       const PairVector& q, double alpha) {
  require_interior(mdp, q);
  const Eigen::VectorXd comp = complements(mdp, q, kDerivedTol);
  const int nl = mdp.num_layers();
  LayerBlockMatrix h;
  h.offsets.resize(nl + 1);
  h.diag.resize(nl);
  h.off.resize(nl);
  for (int k = 0; k < nl; ++k) h.offsets[k] = mdp.pair_begin(k);
  h.offsets[nl] = mdp.num_pairs();

  // Per-layer curvature diagonals d(s,a) = 1/(4 q^{3/2}) and
  // c(s,a) = alpha/(4 comp^{3/2}).
  std::vector<Eigen::VectorXd> cdiag(nl), ddiag(nl);
  for (int k = 0; k < nl; ++k) {
    const int lo = mdp.pair_begin(k), hi = mdp.pair_end(k);
    cdiag[k].resize(hi - lo);
    ddiag[k].resize(hi - lo);
    for (int i = lo; i < hi; ++i) {
      ddiag[k][i - lo] = 0.25 / std::pow(q[i], 1.5);
      cdiag[k][i - lo] = 0.25 * alpha / std::pow(comp[i], 1.5);
    }
  }
  // P_k maps layer k-1 pairs to layer k pairs; the entry does not depend on
  // the action component of the column index.
  std::vector<Eigen::MatrixXd> pk(nl);
  for (int k = 1; k < nl; ++k) {
    const int rows = mdp.pair_end(k - 1) - mdp.pair_begin(k - 1);
    const int cols = mdp.pair_end(k) - mdp.pair_begin(k);
    pk[k] = Eigen::MatrixXd::Zero(rows, cols);
    for (int i = mdp.pair_begin(k - 1); i < mdp.pair_end(k - 1); ++i)
      for (const auto& [t, p] : mdp.successors(i))
        for (int a = 0; a < mdp.num_actions(); ++a)
          pk[k](i - mdp.pair_begin(k - 1),
                mdp.pair_index(t, a) - mdp.pair_begin(k)) = p;
  }
  for (int k = 0; k < nl; ++k) {
    Eigen::MatrixXd d = (cdiag[k] + ddiag[k]).asDiagonal();
    if (k + 1 < nl)
      d.noalias() += pk[k + 1] * cdiag[k + 1].asDiagonal() *
                     pk[k + 1].transpose();
    h.diag[k] = std::move(d);
    if (k > 0) h.off[k] = -(pk[k] * cdiag[k].asDiagonal());
  }
  return h;
}

LayeredInverse layered_inverse(const LayeredMdp& mdp, const PairVector& q,
                               double alpha) {
  require_interior(mdp, q);
  const Eigen::VectorXd comp = complements(mdp, q, kDerivedTol);
  const int nl = mdp.num_layers();
  LayeredInverse out;
  out.n_blocks.resize(nl);
  out.w_blocks.resize(nl);
  out.c_diag.resize(nl);
  out.d_diag.resize(nl);
  out.r_diag.resize(mdp.num_pairs());

  std::vector<Eigen::MatrixXd> pk(nl);
  for (int k = 0; k < nl; ++k) {
    const int lo = mdp.pair_begin(k), hi = mdp.pair_end(k);
    out.c_diag[k].resize(hi - lo);
    out.d_diag[k].resize(hi - lo);
    for (int i = lo; i < hi; ++i) {
      out.d_diag[k][i - lo] = 0.25 / std::pow(q[i], 1.5);
      out.c_diag[k][i - lo] = 0.25 * alpha / std::pow(comp[i], 1.5);
    }
    if (k > 0) {
      const int rows = mdp.pair_end(k - 1) - mdp.pair_begin(k - 1);
      pk[k] = Eigen::MatrixXd::Zero(rows, hi - lo);
      for (int i = mdp.pair_begin(k - 1); i < mdp.pair_end(k - 1); ++i)
        for (const auto& [t, p] : mdp.successors(i))
          for (int a = 0; a < mdp.num_actions(); ++a)
            pk[k](i - mdp.pair_begin(k - 1),
                  mdp.pair_index(t, a) - mdp.pair_begin(k)) = p;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  auto min_eig = [&](const Eigen::MatrixXd& m) {
    eig.compute(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
  };

  out.m_full =
      Eigen::MatrixXd((out.c_diag[0] + out.d_diag[0]).asDiagonal());
  for (int k = 0; k < nl; ++k) {
    if (k == 0) {
      out.n_blocks[0] =
          (out.c_diag[0] + out.d_diag[0]).cwiseInverse().asDiagonal();
    } else {
      // W_k = (C_k^{-1} + D_k^{-1} + P_k^T N_{k-1} P_k)^{-1}; the middle
      // term equals Ptilde_k^T M_{k-1}^{-1} Ptilde_k because Ptilde_k is
      // supported on the last layer block of M_{k-1}.
      Eigen::MatrixXd inner =
          Eigen::MatrixXd((out.c_diag[k].cwiseInverse() +
                           out.d_diag[k].cwiseInverse())
                              .asDiagonal());
      inner.noalias() += pk[k].transpose() * out.n_blocks[k - 1] * pk[k];
      Eigen::LLT<Eigen::MatrixXd> llt(inner);
      if (llt.info() != Eigen::Success)
        throw SingularLayerError(k, "W_k system is singular");
      out.w_blocks[k] = llt.solve(
          Eigen::MatrixXd::Identity(inner.rows(), inner.cols()));
      const Eigen::VectorXd dinv = out.d_diag[k].cwiseInverse();
      out.n_blocks[k] = Eigen::MatrixXd(dinv.asDiagonal()) -
                        dinv.asDiagonal() * out.w_blocks[k] *
                            dinv.asDiagonal();
      // Extend the dense M recursion for the Lemma-D.1 consistency check.
      const int prev = out.m_full.rows();
      const int cur = static_cast<int>(out.c_diag[k].size());
      Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(prev + cur, prev + cur);
      grown.topLeftCorner(prev, prev) = out.m_full;
      grown.block(prev - pk[k].rows(), prev - pk[k].rows(), pk[k].rows(),
                  pk[k].rows())
          .noalias() += pk[k] * out.c_diag[k].asDiagonal() *
                        pk[k].transpose();
      const Eigen::MatrixXd cross = -(pk[k] * out.c_diag[k].asDiagonal());
      grown.block(prev - pk[k].rows(), prev, pk[k].rows(), cur) = cross;
      grown.block(prev, prev - pk[k].rows(), cur, pk[k].rows()) =
          cross.transpose();
      grown.block(prev, prev, cur, cur) =
          Eigen::MatrixXd((out.c_diag[k] + out.d_diag[k]).asDiagonal());
      out.m_full = std::move(grown);
    }
    // Symmetrize away factorization roundoff before the eigen checks.
    out.n_blocks[k] = 0.5 * (out.n_blocks[k] +
                             out.n_blocks[k].transpose().eval());
    if (min_eig(out.n_blocks[k]) <= 0.0)
      throw SingularLayerError(k, "N_k is not positive definite");
    const Eigen::MatrixXd dinv_mat =
        Eigen::MatrixXd(out.d_diag[k].cwiseInverse().asDiagonal());
    double margin = min_eig(dinv_mat - out.n_blocks[k]);
    out.domination_violation = std::max(out.domination_violation, -margin);
    if (margin < -1e-8)
      throw SingularLayerError(k, "N_k <= D_k^{-1} violated");
    if (k > 0) {
      Eigen::MatrixXd rhs =
          Eigen::MatrixXd(out.c_diag[k].cwiseInverse().asDiagonal());
      rhs.noalias() += pk[k].transpose() * out.n_blocks[k - 1] * pk[k];
      margin = min_eig(rhs - out.n_blocks[k]);
      out.domination_violation = std::max(out.domination_violation, -margin);
      if (margin < -1e-8)
        throw SingularLayerError(
            k, "N_k <= C_k^{-1} + P_k^T N_{k-1} P_k violated");
    }
    const int lo = mdp.pair_begin(k);
    for (int i = 0; i < out.n_blocks[k].rows(); ++i)
      out.r_diag[lo + i] = out.n_blocks[k](i, i);
  }

  if (mdp.num_pairs() <= 64) {
    const Eigen::MatrixXd hess = hessian_dense(mdp, q, alpha);
    const double scale = hess.cwiseAbs().maxCoeff();
    const double err = (out.m_full - hess).cwiseAbs().maxCoeff();
    if (err > 1e-8 * scale)
      throw SingularLayerError(
          nl - 1, "M_{L-1} does not reproduce the dense Hessian (|diff| = " +
                      std::to_string(err) + ")");
  }
  return out;
}

double stability_norm(const LayeredMdp& mdp, const PairVector& q,
                      const PairVector& estimate, double alpha) {
  if (estimate.size() != mdp.num_pairs())
    throw std::invalid_argument("estimate has wrong size");
  if (estimate.isZero(0.0)) return 0.0;
  const LayeredCholesky fact(hybrid_hessian_blocks(mdp, q, alpha));
  const double v = estimate.dot(fact.solve(estimate));
  return v < 0.0 ? 0.0 : v;
}

}  // namespace ftrlmdp
