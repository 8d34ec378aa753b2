// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iosfwd>

#include "lsfem/levelset.hpp"
#include "lsfem/timeseries.hpp"

namespace lsfem {

struct FluidParams {
  double rho1 = 0.0;  // outside (phi > 0)
  double rho2 = 0.0;  // inside
  double nu1 = 0.0;
  double nu2 = 0.0;
  double sigma = 0.0;
  Vec2 gravity{0.0, 0.0};  // body acceleration; the bubble setup uses (0, -0.98)

  void validate() const;
};

struct FluidState {
  DiscreteField u;
  DiscreteField p;
  double t = 0.0;
};

struct BubbleNumbers {
  double Re = 0.0;
  double E0 = 0.0;
};
BubbleNumbers dimensionless_numbers(const FluidParams& params, double r0);

// Nodal field v2 + (v1 - v2) H_eps(corrected phi).
DiscreteField mixture_field(const LevelSetOps& ops, const LevelSet& ls, double v1, double v2);

struct VelocityBC {
  enum class Kind { NoSlip, NormalZero, Prescribed };
  struct Item {
    BoundaryMarker marker;
    Kind kind = Kind::NoSlip;
    std::function<Vec2(Vec2)> value;  // Prescribed only
  };
  std::vector<Item> items;
};

// Constrained velocity dofs and their values for a vector space.
void velocity_bc_dofs(const FunctionSpace& u_space, const VelocityBC& bc, std::vector<int>& dofs,
                      std::vector<double>& values);

// Semi-implicit stepper for variable-density/viscosity incompressible flow:
// implicit Stokes part, convection linearized with the previous velocity,
// surface tension and gravity explicit. Pressure is pinned at one dof and
// reported mean-free.
class TwoFluidStepper {
 public:
  TwoFluidStepper(const FunctionSpace& u_space, const FunctionSpace& p_space, LevelSetOps& ls_ops,
                  FluidParams params, VelocityBC bc, ExecPolicy policy = ExecPolicy::OpenMP);

  FluidState initial_state() const;
  FluidState step(const FluidState& state, const LevelSet& ls, double dt);

  // Assembled int sigma kappa (n . v) delta_eps(corrected phi) load.
  Eigen::VectorXd surface_tension_load(const LevelSet& ls) const;

  // max_q | int q div(u) | over pressure test functions.
  double divergence_residual_linf(const FluidState& state) const;

  const FunctionSpace& u_space() const { return *u_space_; }
  const FunctionSpace& p_space() const { return *p_space_; }
  const FluidParams& params() const { return params_; }

 private:
  const FunctionSpace* u_space_;
  const FunctionSpace* p_space_;
  LevelSetOps* ls_ops_;
  FluidParams params_;
  VelocityBC bc_;
  ExecPolicy policy_;
  std::vector<int> bc_dofs_;
  std::vector<double> bc_values_;
  int pressure_pin_;
  FrozenLuSolver solver_;
  std::shared_ptr<AssemblyPlan> plan_;
  mutable std::shared_ptr<AssemblyPlan> st_plan_;
  mutable std::shared_ptr<AssemblyPlan> div_plan_;
};

struct BubbleBenchmarkConfig {
  int test = 1;  // 1 ellipsoidal, 2 skirted (Table-1 parameter sets)
  double h = 0.02;
  double dt = 0.005;
  double T = 3.0;
  int output_every = 1;           // record cadence in steps
  ReinitPolicy reinit;
  StabilizationChoice stabilization;
  FluidParams params() const;     // locked to the test id
  void validate() const;
};

using SnapshotCallback =
    std::function<void(int step, const FluidState& state, const LevelSet& ls)>;

// Couples navier-stokes stepping with level-set advection and the reinit
// policy; records (t, circularity, y_c, u_c, perimeter, area) at cadence.
TimeSeries run_bubble_benchmark(const BubbleBenchmarkConfig& config,
                                std::ostream* progress = nullptr,
                                const SnapshotCallback& snapshot = {});

}  // namespace lsfem
