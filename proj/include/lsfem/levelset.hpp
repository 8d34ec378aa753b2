// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <variant>

#include "lsfem/assembly.hpp"
#include "lsfem/solver.hpp"

namespace lsfem {

// Smoothed step and surface-concentration functions of half-width eps.
double heaviside_eps(double phi, double eps);
double delta_eps(double phi, double eps);

enum class StabilizationMethod { SUPG, GLS, SGS };

StabilizationMethod stabilization_from_string(const std::string& s);
const char* to_string(StabilizationMethod m);

struct StabilizationChoice {
  StabilizationMethod method = StabilizationMethod::SUPG;
  double coefficient = 1.0;  // scales the element tau
};

struct ReinitPolicy {
  double threshold = 0.1;  // mean band | |grad phi| - 1 | that triggers a reinit
  int cadence = 10;        // advection steps between checks
};

// Scalar level-set field: negative inside the particle, positive outside.
struct LevelSet {
  DiscreteField phi;
  double eps = 0.0;
  ReinitPolicy policy;
};

struct CircleShape {
  Vec2 center;
  double radius = 0.0;
};
struct EllipseShape {
  Vec2 center;
  double a = 0.0;  // semi-axis along the (rotated) x direction
  double b = 0.0;
  double angle = 0.0;  // inclination of the a-axis, radians
};
using Shape = std::variant<CircleShape, EllipseShape>;

// Nodal signed Euclidean distance to the shape boundary.
LevelSet init_signed_distance(const FunctionSpace& space, const Shape& shape, double eps,
                              ReinitPolicy policy = {});

struct GeometryFields {
  DiscreteField normal;     // L2 projection of grad(phi)/|grad(phi)|
  DiscreteField curvature;  // L2 projection of div(normal)
};

struct InterfaceMeasures {
  double perimeter = 0.0;
  double area_inside = 0.0;
  double circularity = 0.0;
  Vec2 center_of_mass;
};

// Operations bound to one scalar space; caches mass factorizations, assembly
// plans and the advection factorization so time loops stay cheap.
class LevelSetOps {
 public:
  explicit LevelSetOps(const FunctionSpace& scalar_space, ExecPolicy policy = ExecPolicy::OpenMP);
  ~LevelSetOps();

  const FunctionSpace& scalar_space() const { return *space_; }
  const FunctionSpace& vector_space() const { return *vector_space_; }

  // Elements whose smallest nodal |phi| is below width_in_eps * eps.
  std::vector<int> band_elements(const LevelSet& ls, double width_in_eps = 2.0) const;

  // L2 projection of phi/|grad phi|; same zero contour, unit-slope support.
  DiscreteField corrected_support(const LevelSet& ls) const;

  GeometryFields geometry_fields(const LevelSet& ls) const;

  bool needs_reinit(const LevelSet& ls) const;

  // One Crank-Nicolson step of the stabilized advection equation.
  LevelSet advance(const LevelSet& ls, const DiscreteField& velocity, double dt,
                   const StabilizationChoice& stab = {});

  InterfaceMeasures interface_measures(const LevelSet& ls) const;
  Vec2 mean_velocity(const LevelSet& ls, const DiscreteField& velocity) const;

  // Median over band elements of the element-mean | |grad phi| - 1 |.
  double band_gradient_deviation_median(const LevelSet& ls) const;

  // Cached projectors onto the scalar/vector companion spaces.
  const L2Projector& scalar_projector() const { return *scalar_proj_; }
  const L2Projector& vector_projector() const { return *vector_proj_; }

 private:
  const FunctionSpace* space_;
  std::unique_ptr<FunctionSpace> vector_space_;
  std::unique_ptr<L2Projector> scalar_proj_;
  std::unique_ptr<L2Projector> vector_proj_;
  std::unique_ptr<Integrator> delta_integ_;
  ExecPolicy policy_;
  FrozenLuSolver advect_solver_;
  std::shared_ptr<AssemblyPlan> advect_plan_;
};

// One-shot wrappers over a temporary LevelSetOps.
DiscreteField corrected_support(const LevelSet& ls);
GeometryFields geometry_fields(const LevelSet& ls);
bool needs_reinit(const LevelSet& ls);
LevelSet advance(const LevelSet& ls, const DiscreteField& velocity, double dt,
                 const StabilizationChoice& stab = {});
InterfaceMeasures interface_measures(const LevelSet& ls);

}  // namespace lsfem
