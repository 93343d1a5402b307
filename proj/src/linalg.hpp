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

#ifndef FTRLMDP_SRC_LINALG_HPP_
#define FTRLMDP_SRC_LINALG_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftrlmdp {

// Symmetric matrix over the decision-pair space with the layered zero
// pattern: dense blocks on the layer diagonal and between consecutive
// layers, zero everywhere else.
struct LayerBlockMatrix {
  // diag[k] is U_k x U_k; off[k] is the (U_{k-1} rows, U_k cols) block for
  // k >= 1, off[0] stays empty.
  std::vector<Eigen::MatrixXd> diag;
  std::vector<Eigen::MatrixXd> off;
  std::vector<int> offsets;  // pair-index offset of each layer, plus total

  int rows() const { return offsets.back(); }
  int num_layers() const { return static_cast<int>(diag.size()); }

  void add_diagonal(const Eigen::VectorXd& d) {
    for (int k = 0; k < num_layers(); ++k)
      diag[k].diagonal() += d.segment(offsets[k], diag[k].rows());
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(rows());
    for (int k = 0; k < num_layers(); ++k) {
      const auto xk = x.segment(offsets[k], diag[k].rows());
      y.segment(offsets[k], diag[k].rows()) += diag[k] * xk;
      if (k > 0) {
        const auto xp = x.segment(offsets[k - 1], diag[k - 1].rows());
        y.segment(offsets[k - 1], diag[k - 1].rows()) += off[k] * xk;
        y.segment(offsets[k], diag[k].rows()) += off[k].transpose() * xp;
      }
    }
    return y;
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows(), rows());
    for (int k = 0; k < num_layers(); ++k) {
      m.block(offsets[k], offsets[k], diag[k].rows(), diag[k].cols()) =
          diag[k];
      if (k > 0) {
        m.block(offsets[k - 1], offsets[k], off[k].rows(), off[k].cols()) =
            off[k];
        m.block(offsets[k], offsets[k - 1], off[k].cols(), off[k].rows()) =
            off[k].transpose();
      }
    }
    return m;
  }
};

class SingularLayerError : public std::runtime_error {
 public:
  SingularLayerError(int layer, const std::string& what)
      : std::runtime_error("layer " + std::to_string(layer) + ": " + what),
        layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

// Block-tridiagonal Cholesky (block Thomas): eliminates one layer at a
// time, so the factorization cost is cubic in the layer width rather than
// in the total number of pairs.
class LayeredCholesky {
 public:
  explicit LayeredCholesky(const LayerBlockMatrix& h)
      : offsets_(h.offsets), off_(h.off) {
    const int nl = h.num_layers();
    llt_.resize(nl);
    gain_.resize(nl);
    Eigen::MatrixXd pivot;
    for (int k = 0; k < nl; ++k) {
      pivot = h.diag[k];
      if (k > 0) {
        gain_[k] = llt_[k - 1].solve(off_[k]);  // Lambda_{k-1}^{-1} B_k
        pivot.noalias() -= off_[k].transpose() * gain_[k];
      }
      llt_[k].compute(pivot);
      if (llt_[k].info() != Eigen::Success)
        throw SingularLayerError(k, "pivot block not positive definite");
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    const int nl = static_cast<int>(llt_.size());
    std::vector<Eigen::VectorXd> y(nl);
    for (int k = 0; k < nl; ++k) {
      y[k] = b.segment(offsets_[k], offsets_[k + 1] - offsets_[k]);
      if (k > 0) y[k].noalias() -= gain_[k].transpose() * y[k - 1];
    }
    Eigen::VectorXd x(offsets_.back());
    Eigen::VectorXd xk;
    for (int k = nl - 1; k >= 0; --k) {
      if (k < nl - 1)
        y[k].noalias() -= off_[k + 1] * x.segment(offsets_[k + 1],
                                                  offsets_[k + 2] -
                                                      offsets_[k + 1]);
      xk = llt_[k].solve(y[k]);
      x.segment(offsets_[k], xk.size()) = xk;
    }
    return x;
  }

  Eigen::MatrixXd solve_columns(const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd x(b.rows(), b.cols());
    for (int j = 0; j < b.cols(); ++j) x.col(j) = solve(b.col(j));
    return x;
  }

 private:
  std::vector<int> offsets_;
  std::vector<Eigen::MatrixXd> off_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llt_;
  std::vector<Eigen::MatrixXd> gain_;
};

}  // namespace ftrlmdp

#endif  // FTRLMDP_SRC_LINALG_HPP_
