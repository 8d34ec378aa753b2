// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "lsfem/assembly.hpp"

namespace lsfem {

// One-shot sparse direct solve (multifrontal LU with pivoting). Refines and
// verifies the residual to 1e-10 relative; throws NumericError otherwise.
Eigen::VectorXd solve_linear(const SparseSystem& system);

// Direct solver for time loops: keeps the last LU and applies it as a
// stationary preconditioner (defect correction) while the matrix drifts,
// refactorizing when convergence degrades or the pattern changes. Every
// returned solution satisfies |b - Ax| <= rtol |b|.
class FrozenLuSolver {
 public:
  explicit FrozenLuSolver(double rtol = 1e-10, int max_defect_iters = 10);
  ~FrozenLuSolver();

  Eigen::VectorXd solve(const SparseSystem& system);

  int factorization_count() const { return n_factorizations_; }
  void invalidate();

 private:
  void factorize(const Eigen::SparseMatrix<double>& A, bool pattern_changed);

  struct Impl;
  std::unique_ptr<Impl> impl_;
  double rtol_;
  int max_iters_;
  int n_factorizations_ = 0;
};

}  // namespace lsfem
