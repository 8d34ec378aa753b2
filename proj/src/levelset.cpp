// SPDX-License-Identifier: Apache-2.0
#include "lsfem/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lsfem/errors.hpp"

namespace lsfem {

double heaviside_eps(double phi, double eps) {
  if (phi <= -eps) return 0.0;
  if (phi >= eps) return 1.0;
  return 0.5 * (1.0 + phi / eps + std::sin(M_PI * phi / eps) / M_PI);
}

double delta_eps(double phi, double eps) {
  if (phi <= -eps || phi >= eps) return 0.0;
  return 0.5 / eps * (1.0 + std::cos(M_PI * phi / eps));
}

StabilizationMethod stabilization_from_string(const std::string& s) {
  if (s == "supg") return StabilizationMethod::SUPG;
  if (s == "gls") return StabilizationMethod::GLS;
  if (s == "sgs") return StabilizationMethod::SGS;
  throw ValidationError("unknown stabilization method '" + s + "'");
}

const char* to_string(StabilizationMethod m) {
  switch (m) {
    case StabilizationMethod::SUPG: return "supg";
    case StabilizationMethod::GLS: return "gls";
    case StabilizationMethod::SGS: return "sgs";
  }
  return "?";
}

namespace {

double shape_signed_distance(const Shape& shape, const Vec2& p) {
  if (const auto* c = std::get_if<CircleShape>(&shape)) return (p - c->center).norm() - c->radius;
  const auto& e = std::get<EllipseShape>(shape);
  const Vec2 d = p - e.center;
  const double ca = std::cos(e.angle), sa = std::sin(e.angle);
  return signed_distance_to_ellipse({ca * d.x + sa * d.y, -sa * d.x + ca * d.y}, e.a, e.b);
}

void check_shape_inside(const Shape& shape, const Mesh& mesh) {
  Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (const auto& v : mesh.vertices) {
    lo.x = std::min(lo.x, v.x);
    lo.y = std::min(lo.y, v.y);
    hi.x = std::max(hi.x, v.x);
    hi.y = std::max(hi.y, v.y);
  }
  double r = 0.0;
  Vec2 c;
  if (const auto* circ = std::get_if<CircleShape>(&shape)) {
    if (!(circ->radius > 0.0)) throw ValidationError("init_signed_distance: radius must be positive");
    c = circ->center;
    r = circ->radius;
  } else {
    const auto& e = std::get<EllipseShape>(shape);
    if (!(e.a > 0.0) || !(e.b > 0.0))
      throw ValidationError("init_signed_distance: ellipse axes must be positive");
    c = e.center;
    r = std::max(e.a, e.b);
  }
  if (c.x - r < lo.x || c.x + r > hi.x || c.y - r < lo.y || c.y + r > hi.y)
    throw ValidationError("init_signed_distance: shape does not fit inside the domain");
}

}  // namespace

LevelSet init_signed_distance(const FunctionSpace& space, const Shape& shape, double eps,
                              ReinitPolicy policy) {
  if (space.components() != 1) throw ValidationError("init_signed_distance: scalar space required");
  if (!(eps > 0.0)) throw ValidationError("init_signed_distance: eps must be positive");
  check_shape_inside(shape, space.mesh());
  LevelSet ls;
  ls.eps = eps;
  ls.policy = policy;
  ls.phi = interpolate(space, std::function<double(Vec2)>([&shape](Vec2 p) {
                         return shape_signed_distance(shape, p);
                       }));
  return ls;
}

// ---------------------------------------------------------------------------

LevelSetOps::LevelSetOps(const FunctionSpace& scalar_space, ExecPolicy policy)
    : space_(&scalar_space), policy_(policy), advect_solver_(1e-10) {
  if (scalar_space.components() != 1) throw ValidationError("LevelSetOps: scalar space required");
  const int k = scalar_space.degree();
  vector_space_ = std::make_unique<FunctionSpace>(scalar_space.mesh(), k, 2);
  // The projected expressions (phi/|grad phi|, normals, their divergence) are
  // rational in the coefficients; over-integrate like the delta-weighted terms.
  scalar_proj_ = std::make_unique<L2Projector>(scalar_space, 2 * k + 4, policy);
  vector_proj_ = std::make_unique<L2Projector>(*vector_space_, 2 * k + 4, policy);
  delta_integ_ = std::make_unique<Integrator>(scalar_space.mesh(), 2 * std::max(k, 3) + 4, policy);
}

LevelSetOps::~LevelSetOps() = default;

std::vector<int> LevelSetOps::band_elements(const LevelSet& ls, double width_in_eps) const {
  const FunctionSpace& s = *ls.phi.space;
  std::vector<int> band;
  const double bound = width_in_eps * ls.eps;
  for (int e = 0; e < s.mesh().n_triangles(); ++e) {
    double m = 1e300;
    for (int n : s.element_nodes(e)) m = std::min(m, std::abs(ls.phi.coeffs[s.dof(n, 0)]));
    if (m < bound) band.push_back(e);
  }
  return band;
}

namespace {

// Min and area-mean of | |grad phi| - 1 | plus min |grad phi| over the band.
struct BandGradientStats {
  double min_grad = 1e300;
  double mean_dev = 0.0;
  bool empty = true;
};

BandGradientStats band_gradient_stats(const LevelSet& ls, const std::vector<int>& band) {
  BandGradientStats st;
  if (band.empty()) return st;
  st.empty = false;
  const TriangleQuadrature& rule = triangle_quadrature(2 * ls.phi.space->degree());
  double wsum = 0.0, dev = 0.0;
  for (int e : band) {
    const double area = ls.phi.space->mesh().triangle_signed_area(e);
    for (int q = 0; q < rule.size(); ++q) {
      const double g = ls.phi.gradient_on(e, rule.points[q]).norm();
      st.min_grad = std::min(st.min_grad, g);
      const double w = rule.weights[q] * 2.0 * area;
      dev += w * std::abs(g - 1.0);
      wsum += w;
    }
  }
  st.mean_dev = dev / wsum;
  return st;
}

}  // namespace

bool LevelSetOps::needs_reinit(const LevelSet& ls) const {
  const auto band = band_elements(ls);
  if (band.empty()) throw InvalidStateError("needs_reinit: band empty, no interface in mesh");
  const BandGradientStats st = band_gradient_stats(ls, band);
  // A flattening spot trips the corrected-support guard at 0.1; flag it ahead
  // of the mean-deviation criterion.
  return st.mean_dev > ls.policy.threshold || st.min_grad < 0.25;
}

double LevelSetOps::band_gradient_deviation_median(const LevelSet& ls) const {
  const auto band = band_elements(ls);
  if (band.empty()) throw InvalidStateError("band empty, no interface in mesh");
  const TriangleQuadrature& rule = triangle_quadrature(2 * ls.phi.space->degree());
  std::vector<double> devs;
  devs.reserve(band.size());
  for (int e : band) {
    double d = 0.0;
    for (int q = 0; q < rule.size(); ++q)
      d += rule.weights[q] * 2.0 * std::abs(ls.phi.gradient_on(e, rule.points[q]).norm() - 1.0);
    devs.push_back(d);
  }
  std::nth_element(devs.begin(), devs.begin() + devs.size() / 2, devs.end());
  return devs[devs.size() / 2];
}

namespace {

// Far from the band the ratio phi/|grad phi| only needs a sane sign and
// magnitude (the indicator functions saturate there); a kink in the distance
// field (circle center, ellipse focal segment) would otherwise blow the
// quotient up and pollute the global projection.
std::shared_ptr<std::vector<char>> band_flags(const FunctionSpace& s, const std::vector<int>& band) {
  auto flags = std::make_shared<std::vector<char>>(s.mesh().n_triangles(), 0);
  for (int e : band) (*flags)[e] = 1;
  return flags;
}

}  // namespace

DiscreteField LevelSetOps::corrected_support(const LevelSet& ls) const {
  const auto band = band_elements(ls);
  if (band.empty()) throw InvalidStateError("corrected_support: band empty");
  if (band_gradient_stats(ls, band).min_grad < 0.1)
    throw NeedsReinitError("corrected_support: |grad phi| < 0.1 inside the band; reinitialize first");
  const auto in_band = band_flags(*space_, band);
  const DiscreteField* phi = &ls.phi;
  return scalar_proj_->project([phi, in_band](const ElemContext& ctx, int q) {
    const Vec2 g = ctx.grad(*phi, q);
    const double floor = (*in_band)[ctx.elem()] ? 0.05 : 0.5;
    return ctx.value(*phi, q) / std::max(g.norm(), floor);
  });
}

GeometryFields LevelSetOps::geometry_fields(const LevelSet& ls) const {
  const auto band = band_elements(ls);
  if (band.empty()) throw InvalidStateError("geometry_fields: band empty");
  if (band_gradient_stats(ls, band).min_grad < 0.1)
    throw NeedsReinitError("geometry_fields: |grad phi| < 0.1 inside the band; reinitialize first");
  const auto in_band = band_flags(*space_, band);
  GeometryFields out;
  const DiscreteField* phi = &ls.phi;
  out.normal = vector_proj_->project2([phi, in_band](const ElemContext& ctx, int q) {
    const Vec2 g = ctx.grad(*phi, q);
    const double floor = (*in_band)[ctx.elem()] ? 0.05 : 0.5;
    return g / std::max(g.norm(), floor);
  });
  const DiscreteField* n = &out.normal;
  out.curvature = scalar_proj_->project(
      [n](const ElemContext& ctx, int q) { return ctx.grad2(*n, q).trace(); });
  return out;
}

LevelSet LevelSetOps::advance(const LevelSet& ls, const DiscreteField& velocity, double dt,
                              const StabilizationChoice& stab) {
  if (!(dt > 0.0)) throw ValidationError("advance: dt must be positive");
  if (&velocity.space->mesh() != &space_->mesh())
    throw ValidationError("advance: velocity lives on a different mesh");
  if (stab.coefficient < 0.0) throw ValidationError("advance: stabilization coefficient < 0");

  double umax = 0.0;
  for (int node = 0; node < velocity.space->n_nodes(); ++node)
    umax = std::max(umax, Vec2{velocity.coeffs[velocity.space->dof(node, 0)],
                               velocity.coeffs[velocity.space->dof(node, 1)]}
                              .norm());
  const double h = space_->mesh().target_h > 0.0 ? space_->mesh().target_h
                                                 : mesh_statistics(space_->mesh()).h_max;
  if (umax * dt / h > 1.0)
    std::fprintf(stderr, "advance: CFL %.3f above 1, consider reducing dt\n", umax * dt / h);

  // SUPG, GLS and SGS coincide for the first-order pure-advection operator:
  // the stabilizing test perturbation is tau u.grad(psi) in all three.
  const int qd = 2 * std::max(space_->degree(), velocity.space->degree()) + 2;
  SystemAssembler asmb({space_}, qd, policy_, advect_plan_);
  asmb.add_supg_advection_cn(0, velocity, ls.phi, dt, stab.coefficient);
  SparseSystem sys = asmb.assemble();
  advect_plan_ = asmb.plan();

  LevelSet out;
  out.eps = ls.eps;
  out.policy = ls.policy;
  out.phi = DiscreteField(*space_);
  out.phi.coeffs = advect_solver_.solve(sys);
  return out;
}

InterfaceMeasures LevelSetOps::interface_measures(const LevelSet& ls) const {
  const DiscreteField corrected = corrected_support(ls);
  const DiscreteField* c = &corrected;
  const double eps = ls.eps;

  InterfaceMeasures m;
  m.perimeter =
      delta_integ_->integrate([c, eps](const ElemContext& ctx, int q) {
        return delta_eps(ctx.value(*c, q), eps);
      });
  m.area_inside =
      delta_integ_->integrate([c, eps](const ElemContext& ctx, int q) {
        return 1.0 - heaviside_eps(ctx.value(*c, q), eps);
      });
  if (!(m.perimeter > 0.0) || !(m.area_inside > 0.0))
    throw InvalidStateError("interface_measures: empty interface");
  m.circularity = 2.0 * std::sqrt(M_PI * m.area_inside) / m.perimeter;
  m.center_of_mass =
      delta_integ_->integrate2([c, eps](const ElemContext& ctx, int q) {
        return ctx.x(q) * (1.0 - heaviside_eps(ctx.value(*c, q), eps));
      }) /
      m.area_inside;
  return m;
}

Vec2 LevelSetOps::mean_velocity(const LevelSet& ls, const DiscreteField& velocity) const {
  const DiscreteField corrected = corrected_support(ls);
  const DiscreteField* c = &corrected;
  const DiscreteField* u = &velocity;
  const double eps = ls.eps;
  const double area = delta_integ_->integrate([c, eps](const ElemContext& ctx, int q) {
    return 1.0 - heaviside_eps(ctx.value(*c, q), eps);
  });
  if (!(area > 0.0)) throw InvalidStateError("mean_velocity: empty interface");
  return delta_integ_->integrate2([c, u, eps](const ElemContext& ctx, int q) {
           return ctx.value2(*u, q) * (1.0 - heaviside_eps(ctx.value(*c, q), eps));
         }) /
         area;
}

// ---------------------------------------------------------------------------

DiscreteField corrected_support(const LevelSet& ls) {
  return LevelSetOps(*ls.phi.space).corrected_support(ls);
}
GeometryFields geometry_fields(const LevelSet& ls) {
  return LevelSetOps(*ls.phi.space).geometry_fields(ls);
}
bool needs_reinit(const LevelSet& ls) { return LevelSetOps(*ls.phi.space).needs_reinit(ls); }
LevelSet advance(const LevelSet& ls, const DiscreteField& velocity, double dt,
                 const StabilizationChoice& stab) {
  return LevelSetOps(*ls.phi.space).advance(ls, velocity, dt, stab);
}
InterfaceMeasures interface_measures(const LevelSet& ls) {
  return LevelSetOps(*ls.phi.space).interface_measures(ls);
}

}  // namespace lsfem
