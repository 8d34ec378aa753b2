// SPDX-License-Identifier: Apache-2.0
#include "lsfem/solver.hpp"

#include <Eigen/UmfPackSupport>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace {

std::string singular_context(const Eigen::SparseMatrix<double>& A) {
  // Best-effort diagnostic: first exactly-zero diagonal entry.
  for (int j = 0; j < A.outerSize(); ++j) {
    bool diag_nonzero = false;
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, j); it; ++it)
      if (it.row() == j && it.value() != 0.0) {
        diag_nonzero = true;
        break;
      }
    if (!diag_nonzero) return " (first zero pivot candidate at dof " + std::to_string(j) + ")";
  }
  return "";
}

std::uint64_t pattern_hash(const Eigen::SparseMatrix<double>& A) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  mix(static_cast<std::uint64_t>(A.rows()));
  mix(static_cast<std::uint64_t>(A.nonZeros()));
  const int* outer = A.outerIndexPtr();
  for (int j = 0; j <= A.outerSize(); ++j) mix(static_cast<std::uint64_t>(outer[j]));
  const int* inner = A.innerIndexPtr();
  for (long k = 0; k < A.nonZeros(); k += 64) mix(static_cast<std::uint64_t>(inner[k]));
  return h;
}

}  // namespace

Eigen::VectorXd solve_linear(const SparseSystem& system) {
  const Eigen::SparseMatrix<double>& A = system.matrix;
  const Eigen::VectorXd& b = system.rhs;
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw ValidationError("solve_linear: system dimensions inconsistent");

  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw NumericError("solve_linear: factorization failed, matrix singular" + singular_context(A));

  Eigen::VectorXd x = lu.solve(b);
  const double tol = 1e-10 * std::max(b.norm(), 1e-300);
  Eigen::VectorXd r = b - A * x;
  for (int refine = 0; refine < 3 && r.norm() > tol; ++refine) {
    x += lu.solve(r);
    r = b - A * x;
  }
  if (!(r.norm() <= tol))
    throw NumericError("solve_linear: residual " + std::to_string(r.norm()) +
                       " above tolerance, matrix near-singular" + singular_context(A));
  return x;
}

struct FrozenLuSolver::Impl {
  Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
  // UmfPackLU keeps pointers into the factorized matrix, so the solver owns a
  // copy that outlives the caller's per-step system.
  Eigen::SparseMatrix<double> stored;
  bool analyzed = false;
  bool have = false;
  std::uint64_t hash = 0;
};

FrozenLuSolver::FrozenLuSolver(double rtol, int max_defect_iters)
    : impl_(new Impl), rtol_(rtol), max_iters_(max_defect_iters) {}

FrozenLuSolver::~FrozenLuSolver() = default;

void FrozenLuSolver::invalidate() { impl_->have = false; }

void FrozenLuSolver::factorize(const Eigen::SparseMatrix<double>& A, bool pattern_changed) {
  impl_->stored = A;
  // The outer defect-correction loop already refines and verifies residuals;
  // umfpack's built-in refinement would only duplicate triangular solves.
  impl_->lu.umfpackControl()[UMFPACK_IRSTEP] = 0;
  if (pattern_changed || !impl_->analyzed) {
    impl_->lu.analyzePattern(impl_->stored);
    impl_->analyzed = true;
  }
  impl_->lu.factorize(impl_->stored);
  if (impl_->lu.info() != Eigen::Success) {
    impl_->have = false;
    throw NumericError("FrozenLuSolver: factorization failed, matrix singular" + singular_context(A));
  }
  impl_->have = true;
  ++n_factorizations_;
}

Eigen::VectorXd FrozenLuSolver::solve(const SparseSystem& system) {
  const Eigen::SparseMatrix<double>& A = system.matrix;
  const Eigen::VectorXd& b = system.rhs;
  const double tol = rtol_ * std::max(b.norm(), 1e-300);
  const bool verbose = std::getenv("LSFEM_SOLVER_VERBOSE") != nullptr;

  const std::uint64_t h = pattern_hash(A);
  bool fresh = false;
  if (!impl_->have || h != impl_->hash) {
    factorize(A, h != impl_->hash || !impl_->analyzed);
    impl_->hash = h;
    fresh = true;
  }

  Eigen::VectorXd x = impl_->lu.solve(b);
  Eigen::VectorXd r = b - A * x;
  double rn = r.norm();
  int iters = 0;
  while (rn > tol) {
    if (fresh && iters >= 4)
      throw NumericError("FrozenLuSolver: residual " + std::to_string(rn) +
                         " not converging after refactorization" + singular_context(A));
    if (!fresh && iters >= max_iters_) {
      factorize(A, false);
      fresh = true;
      x = impl_->lu.solve(b);
      r = b - A * x;
      rn = r.norm();
      iters = 0;
      continue;
    }
    x += impl_->lu.solve(r);
    r = b - A * x;
    const double rn2 = r.norm();
    if (verbose)
      std::fprintf(stderr, "defect iter %d: rn %.3e -> %.3e (tol %.3e)\n", iters, rn, rn2, tol);
    if (!fresh && rn2 > 0.7 * rn) {
      // Stale factorization no longer contracts; rebuild.
      factorize(A, false);
      fresh = true;
      x = impl_->lu.solve(b);
      r = b - A * x;
      rn = r.norm();
      iters = 0;
      continue;
    }
    rn = rn2;
    ++iters;
  }
  return x;
}

}  // namespace lsfem
