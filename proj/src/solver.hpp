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

#ifndef FTRLMDP_SRC_SOLVER_HPP_
#define FTRLMDP_SRC_SOLVER_HPP_

#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "regularizer.hpp"

namespace ftrlmdp {

struct SolveConfig {
  // Max-norm target for the Lagrangian stationarity residual (the gradient
  // minus its projection onto the span of the constraint normals).
  double tolerance = 1e-8;
  int max_iterations = 200;
  std::optional<PairVector> warm_start;
};

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
  double objective = 0.0;
  bool converged = false;
  // Objective value at each accepted iterate; never increases.
  std::vector<double> objective_trace;
};

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, SolveReport report)
      : std::runtime_error(what), report(std::move(report)) {}
  SolveReport report;
};

// Smooth strictly-convex part of the per-episode objective. Implementations
// must blow up (value or gradient) toward the boundary of their domain so
// that the fraction-to-the-boundary line search keeps iterates interior.
class StepRegularizer {
 public:
  virtual ~StepRegularizer() = default;
  virtual double value(const LayeredMdp& mdp, const PairVector& q) const = 0;
  virtual PairVector gradient(const LayeredMdp& mdp,
                              const PairVector& q) const = 0;
  virtual LayerBlockMatrix hessian(const LayeredMdp& mdp,
                                   const PairVector& q) const = 0;
  // Largest step along p keeping q + step * p inside the domain, before the
  // 0.99 fraction-to-the-boundary factor. Default guards the entries only.
  virtual double max_step(const LayeredMdp& mdp, const PairVector& q,
                          const PairVector& p) const;
};

// (1/eta_t) phi_H + phi_L.
class HybridStepRegularizer : public StepRegularizer {
 public:
  HybridStepRegularizer(const RegularizerParams& params, int t);
  double value(const LayeredMdp& mdp, const PairVector& q) const override;
  PairVector gradient(const LayeredMdp& mdp,
                      const PairVector& q) const override;
  LayerBlockMatrix hessian(const LayeredMdp& mdp,
                           const PairVector& q) const override;
  double max_step(const LayeredMdp& mdp, const PairVector& q,
                  const PairVector& p) const override;

 private:
  double alpha_, beta_, inv_eta_;
};

// (1/eta) sum q ln q — the O-REPS step.
class ShannonStepRegularizer : public StepRegularizer {
 public:
  explicit ShannonStepRegularizer(double eta);
  double value(const LayeredMdp& mdp, const PairVector& q) const override;
  PairVector gradient(const LayeredMdp& mdp,
                      const PairVector& q) const override;
  LayerBlockMatrix hessian(const LayeredMdp& mdp,
                           const PairVector& q) const override;

 private:
  double inv_eta_;
};

// argmin_{q in Omega} <q, linear> + reg(q) by equality-constrained Newton.
// The log-barrier (or entropy) keeps iterates interior; positivity along a
// step is maintained by a 0.99 fraction-to-the-boundary cap followed by an
// Armijo backtracking line search, halving on non-finite values (at most 60
// halvings, then the solve fails carrying its report). The KKT system is
// solved by eliminating the layered Hessian first, so the per-iteration
// cost follows the layer structure. Deterministic given inputs.
std::pair<PairVector, SolveReport> solve_regularized_step(
    const LayeredMdp& mdp, const PairVector& linear,
    const StepRegularizer& reg, const SolveConfig& config = {});

// The per-episode FTRL step with the hybrid regularizer at episode t.
std::pair<PairVector, SolveReport> solve_ftrl(
    const LayeredMdp& mdp, const PairVector& cumulative_estimate,
    const RegularizerParams& params, int t, const SolveConfig& config = {});

// argmin of psi_1 alone.
PairVector initial_occupancy(const LayeredMdp& mdp,
                             const RegularizerParams& params,
                             const SolveConfig& config = {});

// O-REPS step: Shannon entropy with learning rate eta.
std::pair<PairVector, SolveReport> solve_oreps_step(
    const LayeredMdp& mdp, const PairVector& cumulative_estimate, double eta,
    const SolveConfig& config = {});

}  // namespace ftrlmdp

#endif  // FTRLMDP_SRC_SOLVER_HPP_
