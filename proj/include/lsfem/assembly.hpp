// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <vector>

#include "lsfem/field.hpp"
#include "lsfem/quadrature.hpp"

namespace lsfem {

// Element loops run either serially or OpenMP-parallel over fixed 64-element
// chunks. Both paths compute identical per-element blocks and reduce them in
// element order, so results are bitwise independent of the policy and of the
// thread count.
enum class ExecPolicy { Serial, OpenMP };

// Block-structured square system; after apply_essential_bc, constrained rows
// are identity rows with the boundary value on the right-hand side.
struct SparseSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  std::vector<int> block_offsets;  // size n_blocks + 1

  int n_dofs() const { return static_cast<int>(rhs.size()); }
  int offset(int block) const { return block_offsets[block]; }
};

namespace detail {
constexpr int kMaxQ = 64;
constexpr int kMaxNpe = 10;
constexpr int kChunk = 64;
struct ElemScratch;
struct BasisTables;
}  // namespace detail

// Per-element quadrature view handed to coefficient and kernel callbacks.
// Field evaluation works for any DiscreteField living on the same mesh with
// degree 1..3.
class ElemContext {
 public:
  int elem() const { return elem_; }
  int nq() const { return nq_; }
  const Vec2& x(int q) const;
  double weight(int q) const;  // quadrature weight including |det J|
  double h_elem() const;       // longest edge

  double value(const DiscreteField& f, int q, int comp = 0) const;
  Vec2 value2(const DiscreteField& f, int q) const;
  Vec2 grad(const DiscreteField& f, int q, int comp = 0) const;
  Mat2 grad2(const DiscreteField& f, int q) const;  // (r,c) = d u_r / d x_c

  // Basis data of a registered block space on this element.
  const double* basis_values(int block, int q) const;
  const Vec2* basis_grads(int block, int q) const;

 private:
  friend class SystemAssembler;
  friend class Integrator;
  const detail::BasisTables* tables_;
  detail::ElemScratch* scratch_;
  const Mesh* mesh_;
  const std::vector<const FunctionSpace*>* blocks_;
  int elem_ = -1;
  int nq_ = 0;
};

using ScalarCoeff = std::function<double(const ElemContext&, int)>;
using VectorCoeff = std::function<Vec2(const ElemContext&, int)>;

struct AssemblyPlan;  // cached sparsity pattern + scatter maps

// Assembles a block system from registered weak-form kernels by element-wise
// quadrature and scatter. Re-register the kernels each step and pass the plan
// back in to skip the symbolic phase.
class SystemAssembler {
 public:
  SystemAssembler(std::vector<const FunctionSpace*> blocks, int quadrature_degree,
                  ExecPolicy policy = ExecPolicy::OpenMP,
                  std::shared_ptr<AssemblyPlan> plan = nullptr);
  ~SystemAssembler();

  // c u v (component-wise for vector blocks); c defaults to 1.
  void add_mass(int row, int col, ScalarCoeff c = {});
  // c grad(u) . grad(v), component-wise.
  void add_stiffness(int row, int col, ScalarCoeff c = {});
  // 2 nu D(u):D(v) on a vector block.
  void add_sym_diffusion(int row, int col, ScalarCoeff nu);
  // c (beta . grad u) v, component-wise; beta is a vector field.
  void add_advection(int row, int col, const DiscreteField& beta, ScalarCoeff c = {});
  // -int p div(v) into (u_block, p_block) and +int q div(u) into (p_block, u_block).
  void add_div_coupling(int u_block, int p_block);
  // int w lambda (grad_s . v) and its transpose; grad_s uses the projected
  // normal field evaluated at quadrature points.
  void add_surface_div_coupling(int u_block, int lambda_block, const DiscreteField& normal,
                                ScalarCoeff weight);
  // One Crank-Nicolson step of d(phi)/dt + u . grad(phi) = 0 with SUPG test
  // functions; fills both the matrix and the right-hand side.
  void add_supg_advection_cn(int block, const DiscreteField& velocity, const DiscreteField& phi_n,
                             double dt, double stab_coeff);

  void add_load(int row, ScalarCoeff f);         // int f v (scalar block)
  void add_vector_load(int row, VectorCoeff f);  // int f . v (vector block)
  void add_grad_load(int row, VectorCoeff f);    // int f . grad(v) (scalar block)

  SparseSystem assemble();
  std::shared_ptr<AssemblyPlan> plan() const { return plan_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<AssemblyPlan> plan_;
};

// Symmetric elimination: moves known values to the right-hand side, zeroes the
// constrained rows/columns and places 1 on the diagonal. Sparsity is preserved.
void apply_essential_bc(SparseSystem& system, const std::vector<int>& dofs,
                        const std::vector<double>& values);

// Deterministic domain integral of a quadrature expression.
class Integrator {
 public:
  Integrator(const Mesh& mesh, int quadrature_degree, ExecPolicy policy = ExecPolicy::OpenMP);
  ~Integrator();
  double integrate(const ScalarCoeff& f) const;
  Vec2 integrate2(const VectorCoeff& f) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// L2-best approximation in a space: mass matrix solve against the expression.
// The factorization is cached, so one projector can serve a whole time loop.
class L2Projector {
 public:
  L2Projector(const FunctionSpace& space, int quadrature_degree,
              ExecPolicy policy = ExecPolicy::OpenMP);
  ~L2Projector();

  DiscreteField project(const ScalarCoeff& f) const;   // scalar space
  DiscreteField project2(const VectorCoeff& f) const;  // vector space
  // Weak divergence: solves int S psi = -int X . grad(psi) for S.
  DiscreteField project_weak_divergence(const VectorCoeff& x) const;

  const FunctionSpace& space() const { return space_; }

 private:
  DiscreteField solve_against(const Eigen::VectorXd& load) const;
  const FunctionSpace& space_;
  int quad_degree_;
  ExecPolicy policy_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

DiscreteField project_l2(const FunctionSpace& space, int quadrature_degree, const ScalarCoeff& f,
                         ExecPolicy policy = ExecPolicy::OpenMP);

}  // namespace lsfem
