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

#include "solver.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

namespace ftrlmdp {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr double kBoundaryFraction = 0.99;
constexpr double kFeasibilityTol = 1e-10;
constexpr int kMaxHalvings = 60;

// Independent rows spanning the occupancy polytope's equality constraints:
// the layer-0 normalization plus one flow-conservation row per state in
// layers 1..L-1. Normalization of the later layers is implied.
struct Constraints {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::LLT<Eigen::MatrixXd> gram;  // of A A^T

  explicit Constraints(const LayeredMdp& mdp) {
    int rows = 1;
    for (int k = 1; k < mdp.num_layers(); ++k)
      rows += static_cast<int>(mdp.states_in_layer(k).size());
    a = Eigen::MatrixXd::Zero(rows, mdp.num_pairs());
    b = Eigen::VectorXd::Zero(rows);
    for (int i = mdp.pair_begin(0); i < mdp.pair_end(0); ++i) a(0, i) = 1.0;
    b[0] = 1.0;
    int r = 1;
    for (int k = 1; k < mdp.num_layers(); ++k) {
      for (int s : mdp.states_in_layer(k)) {
        for (int att = 0; att < mdp.num_actions(); ++att)
          a(r, mdp.pair_index(s, att)) = 1.0;
        for (int i = mdp.pair_begin(k - 1); i < mdp.pair_end(k - 1); ++i) {
          const double p = mdp.transition(mdp.pair_state(i),
                                          mdp.pair_action(i), s);
          if (p != 0.0) a(r, i) = -p;
        }
        ++r;
      }
    }
    gram.compute(a * a.transpose());
    if (gram.info() != Eigen::Success)
      throw std::runtime_error("constraint rows are linearly dependent");
  }

  // Max-norm of the gradient component orthogonal to the constraint
  // normals: the Lagrangian stationarity residual.
  double stationarity_residual(const Eigen::VectorXd& g) const {
    const Eigen::VectorXd lambda = gram.solve(a * g);
    return (g - a.transpose() * lambda).lpNorm<Eigen::Infinity>();
  }

  double feasibility_residual(const Eigen::VectorXd& q) const {
    return (a * q - b).lpNorm<Eigen::Infinity>();
  }

  // Minimum-norm correction back onto the affine constraint set.
  void project(Eigen::VectorXd& q) const {
    q += a.transpose() * gram.solve(b - a * q);
  }
};

}  // namespace

double StepRegularizer::max_step(const LayeredMdp& /*mdp*/,
                                 const PairVector& q,
                                 const PairVector& p) const {
  double step = std::numeric_limits<double>::infinity();
  for (int i = 0; i < q.size(); ++i)
    if (p[i] < 0.0) step = std::min(step, q[i] / -p[i]);
  return step;
}

HybridStepRegularizer::HybridStepRegularizer(const RegularizerParams& params,
                                             int t) {
  params.validate();
  if (t < 1) throw std::invalid_argument("episode index must be >= 1");
  alpha_ = params.alpha;
  beta_ = params.beta;
  inv_eta_ = params.inverse_learning_rate(t);
}

double HybridStepRegularizer::value(const LayeredMdp& mdp,
                                    const PairVector& q) const {
  return inv_eta_ * hybrid_regularizer(mdp, q, alpha_) +
         log_barrier(q, beta_);
}

PairVector HybridStepRegularizer::gradient(const LayeredMdp& mdp,
                                           const PairVector& q) const {
  PairVector g = inv_eta_ * hybrid_gradient(mdp, q, alpha_);
  for (int i = 0; i < q.size(); ++i) g[i] -= beta_ / q[i];
  return g;
}

LayerBlockMatrix HybridStepRegularizer::hessian(const LayeredMdp& mdp,
                                                const PairVector& q) const {
  LayerBlockMatrix h = hybrid_hessian_blocks(mdp, q, alpha_);
  for (auto& d : h.diag) d *= inv_eta_;
  for (auto& o : h.off) o *= inv_eta_;
  h.add_diagonal(beta_ * q.cwiseAbs2().cwiseInverse());
  return h;
}

double HybridStepRegularizer::max_step(const LayeredMdp& mdp,
                                       const PairVector& q,
                                       const PairVector& p) const {
  double step = StepRegularizer::max_step(mdp, q, p);
  // Complements must stay positive as well.
  const Eigen::VectorXd marg = state_marginals(mdp, q);
  const Eigen::VectorXd dmarg = kernel_pushforward(mdp, p);
  for (int i = 0; i < q.size(); ++i) {
    const int s = mdp.pair_state(i);
    const double comp = marg[s] - q[i];
    const double dcomp = dmarg[s] - p[i];
    if (dcomp < 0.0) step = std::min(step, comp / -dcomp);
  }
  return step;
}

ShannonStepRegularizer::ShannonStepRegularizer(double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  inv_eta_ = 1.0 / eta;
}

double ShannonStepRegularizer::value(const LayeredMdp& /*mdp*/,
                                     const PairVector& q) const {
  double v = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0)
      throw std::domain_error("entropy: nonpositive occupancy entry");
    v += q[i] * std::log(q[i]);
  }
  return inv_eta_ * v;
}

PairVector ShannonStepRegularizer::gradient(const LayeredMdp& /*mdp*/,
                                            const PairVector& q) const {
  PairVector g(q.size());
  for (int i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0)
      throw std::domain_error("entropy: nonpositive occupancy entry");
    g[i] = inv_eta_ * (1.0 + std::log(q[i]));
  }
  return g;
}

LayerBlockMatrix ShannonStepRegularizer::hessian(const LayeredMdp& mdp,
                                                 const PairVector& q) const {
  LayerBlockMatrix h;
  const int nl = mdp.num_layers();
  h.offsets.resize(nl + 1);
  h.diag.resize(nl);
  h.off.resize(nl);
  for (int k = 0; k < nl; ++k) {
    h.offsets[k] = mdp.pair_begin(k);
    const int width = mdp.pair_end(k) - mdp.pair_begin(k);
    h.diag[k] = Eigen::MatrixXd::Zero(width, width);
    for (int i = 0; i < width; ++i)
      h.diag[k](i, i) = inv_eta_ / q[mdp.pair_begin(k) + i];
    if (k > 0)
      h.off[k] = Eigen::MatrixXd::Zero(
          mdp.pair_end(k - 1) - mdp.pair_begin(k - 1), width);
  }
  h.offsets[nl] = mdp.num_pairs();
  return h;
}

std::pair<PairVector, SolveReport> solve_regularized_step(
    const LayeredMdp& mdp, const PairVector& linear,
    const StepRegularizer& reg, const SolveConfig& config) {
  if (linear.size() != mdp.num_pairs())
    throw std::invalid_argument("linear term has wrong size");
  if (!(config.tolerance > 0.0))
    throw std::invalid_argument("tolerance must be > 0");
  const Constraints cons(mdp);

  auto usable_start = [&](const PairVector& q) {
    if (q.size() != mdp.num_pairs()) return false;
    if (occupancy_violation(mdp, q) > 1e-8) return false;
    try {
      (void)reg.value(mdp, q);
      (void)reg.gradient(mdp, q);
    } catch (const std::domain_error&) {
      return false;
    }
    return true;
  };

  PairVector q;
  if (config.warm_start && usable_start(*config.warm_start)) {
    q = *config.warm_start;
  } else {
    q = occupancy_from_policy(mdp, uniform_policy(mdp));
  }

  SolveReport report;
  double obj = linear.dot(q) + reg.value(mdp, q);
  report.objective_trace.push_back(obj);

  for (int it = 0;; ++it) {
    const PairVector g = linear + reg.gradient(mdp, q);
    report.residual = cons.stationarity_residual(g);
    report.objective = obj;
    report.iterations = it;
    if (report.residual <= config.tolerance &&
        cons.feasibility_residual(q) <= kFeasibilityTol) {
      report.converged = true;
      break;
    }
    if (it >= config.max_iterations)
      throw SolveError("FTRL step did not converge within " +
                           std::to_string(config.max_iterations) +
                           " iterations (residual " +
                           std::to_string(report.residual) + ")",
                       report);

    const LayeredCholesky fact(reg.hessian(mdp, q));
    const Eigen::VectorXd xg = fact.solve(g);
    const Eigen::MatrixXd xa = fact.solve_columns(cons.a.transpose());
    const Eigen::MatrixXd schur = cons.a * xa;
    const Eigen::VectorXd nu =
        schur.llt().solve(cons.b - cons.a * q - cons.a * xg);
    const PairVector p = -(xg + xa * nu);
    const double slope = g.dot(p);
    if (!(slope < 0.0)) {
      // Curvature exhausted at this accuracy; accept if we are close.
      if (report.residual <= 100.0 * config.tolerance) {
        report.converged = true;
        break;
      }
      throw SolveError("no descent direction (residual " +
                           std::to_string(report.residual) + ")",
                       report);
    }

    double step = std::min(1.0, kBoundaryFraction * reg.max_step(mdp, q, p));
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h) {
      const PairVector qn = q + step * p;
      double fn;
      try {
        fn = linear.dot(qn) + reg.value(mdp, qn);
      } catch (const std::domain_error&) {
        step *= 0.5;
        continue;
      }
      if (std::isfinite(fn) && fn <= obj + kArmijoSlope * step * slope) {
        q = qn;
        obj = fn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw SolveError("line search failed after " +
                           std::to_string(kMaxHalvings) + " halvings",
                       report);
    report.objective_trace.push_back(obj);
  }

  cons.project(q);
  return {q, report};
}

std::pair<PairVector, SolveReport> solve_ftrl(
    const LayeredMdp& mdp, const PairVector& cumulative_estimate,
    const RegularizerParams& params, int t, const SolveConfig& config) {
  for (int i = 0; i < cumulative_estimate.size(); ++i)
    if (!std::isfinite(cumulative_estimate[i]) || cumulative_estimate[i] < 0.0)
      throw std::invalid_argument(
          "cumulative estimate must be finite and nonnegative");
  return solve_regularized_step(mdp, cumulative_estimate,
                                HybridStepRegularizer(params, t), config);
}

PairVector initial_occupancy(const LayeredMdp& mdp,
                             const RegularizerParams& params,
                             const SolveConfig& config) {
  return solve_ftrl(mdp, PairVector::Zero(mdp.num_pairs()), params, 1, config)
      .first;
}

std::pair<PairVector, SolveReport> solve_oreps_step(
    const LayeredMdp& mdp, const PairVector& cumulative_estimate, double eta,
    const SolveConfig& config) {
  return solve_regularized_step(mdp, cumulative_estimate,
                                ShannonStepRegularizer(eta), config);
}

}  // namespace ftrlmdp
