// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

#include "lsfem/levelset.hpp"
#include "lsfem/timeseries.hpp"
#include "lsfem/twofluid.hpp"

namespace lsfem {

struct VesicleConfig {
  double k_B = 0.0;    // bending modulus
  double nu1 = 1.0;    // outer viscosity
  double nu2 = 1.0;    // inner viscosity
  double gamma = 1.0;  // shear rate of the wall-driven flow
  double box_width = 10.0;
  double box_height = 2.12;
  EllipseShape initial;  // horizontal ellipse at the channel center by default
  int deg_velocity = 3, deg_pressure = 2, deg_multiplier = 2, deg_levelset = 2;
  double h = 0.058;
  double dt = 5e-3;
  double T = 5.0;
  ReinitPolicy reinit;
  StabilizationChoice stabilization;
  bool multiplier_enabled = true;  // disabling drops the inextensibility block
  int output_every = 1;

  double nu_ratio() const { return nu2 / nu1; }
  void validate() const;
};

struct VesicleDescriptors {
  double alpha = 0.0;        // 4 pi A / P^2
  double Ca = 0.0;           // nu2 gamma R0^3 / k_B
  double confinement = 0.0;  // R0 / (H/2)
  double R0 = 0.0;           // P / (2 pi)
  double perimeter = 0.0;
  double area = 0.0;
};

// Perimeter of an axis-aligned ellipse, AGM-based complete elliptic integral.
double ellipse_perimeter(double a, double b);

// Axes of the ellipse with a prescribed area and perimeter (a >= b).
void solve_ellipse_axes(double area, double perimeter, double& a, double& b);

// Fills the initial ellipse and k_B so the run hits the requested reduced
// area, capillary number and confinement inside the configured box.
void configure_vesicle_targets(VesicleConfig& config, double alpha, double Ca, double confinement,
                               double nu_ratio);

struct MembraneSolveResult {
  DiscreteField u;
  DiscreteField p;
  DiscreteField lambda;        // zero outside the band dofs
  std::vector<int> band_dofs;  // multiplier dofs kept in the solve
};

struct InclinationAngle {
  double angle = 0.0;  // radians in (-pi/2, pi/2]
  bool defined = true; // false when the shape is too circular
};

// Principal-axis angle of the second-moment tensor of the interior.
InclinationAngle inclination_angle(const LevelSetOps& ops, const LevelSet& ls);

VesicleDescriptors vesicle_descriptors(const LevelSetOps& ops, const LevelSet& ls,
                                       const VesicleConfig& config);

// Multiplier dofs attached to elements with min nodal |corrected phi| < 2 eps.
std::vector<int> multiplier_band_dofs(const LevelSetOps& ops, const LevelSet& ls,
                                      const FunctionSpace& multiplier_space);

// Quasi-static Stokes solve with membrane bending forcing and the
// inextensibility constraint carried by an interface-band Lagrange multiplier.
class VesicleStepper {
 public:
  VesicleStepper(const Mesh& mesh, const VesicleConfig& config, LevelSetOps& phi_ops,
                 ExecPolicy policy = ExecPolicy::OpenMP);

  MembraneSolveResult solve(const LevelSet& ls);

  // Assembled bending load against the velocity test space.
  Eigen::VectorXd bending_force_load(const LevelSet& ls, double k_B);

  // max over band test functions of | int mu (grad_s . u) delta |.
  double surface_div_residual(const MembraneSolveResult& result, const LevelSet& ls);

  // Net tangential flux along the membrane, int (u . t) delta; nonzero under
  // tank treading.
  double membrane_circulation(const DiscreteField& u, const LevelSet& ls);

  const FunctionSpace& u_space() const { return *u_space_; }
  const FunctionSpace& p_space() const { return *p_space_; }
  const FunctionSpace& lambda_space() const { return *lambda_space_; }

 private:
  const Mesh* mesh_;
  VesicleConfig config_;
  LevelSetOps* phi_ops_;
  ExecPolicy policy_;
  std::unique_ptr<FunctionSpace> u_space_, p_space_, lambda_space_;
  std::vector<int> wall_dofs_;
  std::vector<double> wall_values_;
  FrozenLuSolver solver_;
  std::shared_ptr<AssemblyPlan> plan_;
  std::shared_ptr<AssemblyPlan> bend_plan_;
  std::shared_ptr<AssemblyPlan> resid_plan_;
};

// Shear-driven run recording (t, angle, perimeter, perimeter_loss_pct, area).
TimeSeries run_tank_treading(const VesicleConfig& config, std::ostream* progress = nullptr);

// As run_tank_treading but records the unwrapped angle: (t, angle, perimeter,
// perimeter_loss_pct, area) with angle continuous through +-pi/2.
TimeSeries run_tumbling(const VesicleConfig& config, std::ostream* progress = nullptr);

// Tumbles (pi rotations) per unit time counted from crossings of multiples of
// pi in the unwrapped angle; needs at least two full pi periods.
double tumbling_frequency(const TimeSeries& series);

}  // namespace lsfem
