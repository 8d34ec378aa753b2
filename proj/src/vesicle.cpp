// SPDX-License-Identifier: Apache-2.0
#include "lsfem/vesicle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "lsfem/errors.hpp"
#include "lsfem/fmm.hpp"

namespace lsfem {

void VesicleConfig::validate() const {
  if (!(k_B >= 0.0)) throw ValidationError("VesicleConfig: k_B must be non-negative");
  if (!(nu1 > 0.0) || !(nu2 > 0.0)) throw ValidationError("VesicleConfig: viscosities must be positive");
  if (!(gamma > 0.0)) throw ValidationError("VesicleConfig: shear rate must be positive");
  if (!(box_width > 0.0) || !(box_height > 0.0))
    throw ValidationError("VesicleConfig: box dimensions must be positive");
  if (!(initial.a > initial.b) || !(initial.b > 0.0))
    throw ValidationError("VesicleConfig: initial ellipse needs a > b > 0");
  if (!(h > 0.0) || !(dt > 0.0) || !(T > 0.0))
    throw ValidationError("VesicleConfig: h, dt, T must be positive");
  if (deg_velocity < 2 || deg_velocity > 3 || deg_pressure != deg_velocity - 1)
    throw ValidationError("VesicleConfig: velocity/pressure degrees must form a Taylor-Hood pair");
  if (deg_multiplier < 1 || deg_multiplier > 3 || deg_levelset < 1 || deg_levelset > 3)
    throw ValidationError("VesicleConfig: multiplier/levelset degrees must be in 1..3");
  if (output_every < 1) throw ValidationError("VesicleConfig: output_every must be >= 1");
}

double ellipse_perimeter(double a, double b) {
  if (a < b) std::swap(a, b);
  if (!(b > 0.0)) throw ValidationError("ellipse_perimeter: axes must be positive");
  if (a == b) return 2.0 * M_PI * a;
  const double m = 1.0 - (b * b) / (a * a);
  double x = 1.0, y = b / a;
  double c2sum = 0.5 * m;
  double pow2 = 0.5;
  while (x - y > 1e-16 * x) {
    const double c = 0.5 * (x - y);
    const double xn = 0.5 * (x + y);
    y = std::sqrt(x * y);
    x = xn;
    pow2 *= 2.0;
    c2sum += pow2 * c * c;
  }
  const double K = M_PI / (2.0 * x);
  return 4.0 * a * K * (1.0 - c2sum);
}

void solve_ellipse_axes(double area, double perimeter, double& a, double& b) {
  if (!(area > 0.0) || !(perimeter > 0.0))
    throw ValidationError("solve_ellipse_axes: area and perimeter must be positive");
  const double m = std::sqrt(area / M_PI);  // geometric mean of the axes
  if (perimeter <= 2.0 * M_PI * m * (1.0 + 1e-12))
    throw ValidationError("solve_ellipse_axes: perimeter not above the circle minimum");
  double lo = m, hi = m;
  while (ellipse_perimeter(hi, m * m / hi) < perimeter) {
    hi *= 1.5;
    if (hi > 1e6 * m) throw ValidationError("solve_ellipse_axes: no bracketing axis found");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ellipse_perimeter(mid, m * m / mid) < perimeter)
      lo = mid;
    else
      hi = mid;
  }
  a = 0.5 * (lo + hi);
  b = m * m / a;
}

void configure_vesicle_targets(VesicleConfig& config, double alpha, double Ca, double confinement,
                               double nu_ratio) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw ValidationError("configure_vesicle_targets: reduced area must be in (0,1)");
  if (!(Ca > 0.0) || !(confinement > 0.0) || !(nu_ratio > 0.0))
    throw ValidationError("configure_vesicle_targets: Ca, confinement, nu_ratio must be positive");
  const double R0 = confinement * config.box_height / 2.0;
  const double P = 2.0 * M_PI * R0;
  const double A = alpha * M_PI * R0 * R0;
  double a = 0.0, b = 0.0;
  solve_ellipse_axes(A, P, a, b);
  config.initial = EllipseShape{{config.box_width / 2.0, config.box_height / 2.0}, a, b, 0.0};
  config.nu2 = nu_ratio * config.nu1;
  config.k_B = config.nu2 * config.gamma * R0 * R0 * R0 / Ca;
}

InclinationAngle inclination_angle(const LevelSetOps& ops, const LevelSet& ls) {
  const DiscreteField corrected = ops.corrected_support(ls);
  const DiscreteField* c = &corrected;
  const double eps = ls.eps;
  Integrator integ(ops.scalar_space().mesh(), 2 * std::max(ops.scalar_space().degree(), 3) + 4);

  auto weight = [c, eps](const ElemContext& ctx, int q) {
    return 1.0 - heaviside_eps(ctx.value(*c, q), eps);
  };
  const double area = integ.integrate(weight);
  if (!(area > 0.0)) throw InvalidStateError("inclination_angle: empty interface");
  const Vec2 com = integ.integrate2([&](const ElemContext& ctx, int q) {
                     return ctx.x(q) * weight(ctx, q);
                   }) /
                   area;
  const Vec2 mxx_mxy = integ.integrate2([&](const ElemContext& ctx, int q) {
    const Vec2 d = ctx.x(q) - com;
    return Vec2{d.x * d.x, d.x * d.y} * weight(ctx, q);
  });
  const double myy = integ.integrate([&](const ElemContext& ctx, int q) {
    const Vec2 d = ctx.x(q) - com;
    return d.y * d.y * weight(ctx, q);
  });
  const double mxx = mxx_mxy.x, mxy = mxx_mxy.y;

  const double tr = mxx + myy;
  const double gap = std::sqrt((mxx - myy) * (mxx - myy) + 4.0 * mxy * mxy);
  InclinationAngle out;
  const double lmax = 0.5 * (tr + gap), lmin = 0.5 * (tr - gap);
  if (gap <= 0.01 * std::abs(lmax)) {
    out.defined = false;
    out.angle = 0.0;
    return out;
  }
  (void)lmin;
  out.angle = 0.5 * std::atan2(2.0 * mxy, mxx - myy);
  if (out.angle <= -M_PI / 2.0) out.angle += M_PI;
  return out;
}

VesicleDescriptors vesicle_descriptors(const LevelSetOps& ops, const LevelSet& ls,
                                       const VesicleConfig& config) {
  const InterfaceMeasures m = ops.interface_measures(ls);
  VesicleDescriptors d;
  d.perimeter = m.perimeter;
  d.area = m.area_inside;
  d.alpha = 4.0 * M_PI * m.area_inside / (m.perimeter * m.perimeter);
  d.R0 = m.perimeter / (2.0 * M_PI);
  d.Ca = config.k_B > 0.0 ? config.nu2 * config.gamma * d.R0 * d.R0 * d.R0 / config.k_B : 0.0;
  d.confinement = d.R0 / (config.box_height / 2.0);
  return d;
}

std::vector<int> multiplier_band_dofs(const LevelSetOps& ops, const LevelSet& ls,
                                      const FunctionSpace& multiplier_space) {
  const DiscreteField corrected = ops.corrected_support(ls);
  const FunctionSpace& phi_space = ops.scalar_space();
  std::vector<char> keep(multiplier_space.n_dofs(), 0);
  bool any = false;
  for (int e = 0; e < phi_space.mesh().n_triangles(); ++e) {
    double m = 1e300;
    for (int node : phi_space.element_nodes(e))
      m = std::min(m, std::abs(corrected.coeffs[phi_space.dof(node, 0)]));
    if (m < 2.0 * ls.eps) {
      any = true;
      for (int node : multiplier_space.element_nodes(e)) keep[multiplier_space.dof(node, 0)] = 1;
    }
  }
  if (!any) throw InvalidStateError("multiplier_band_dofs: empty band");
  std::vector<int> dofs;
  for (int d = 0; d < multiplier_space.n_dofs(); ++d)
    if (keep[d]) dofs.push_back(d);
  return dofs;
}

// ---------------------------------------------------------------------------

VesicleStepper::VesicleStepper(const Mesh& mesh, const VesicleConfig& config, LevelSetOps& phi_ops,
                               ExecPolicy policy)
    : mesh_(&mesh), config_(config), phi_ops_(&phi_ops), policy_(policy), solver_(1e-9) {
  config_.validate();
  u_space_ = std::make_unique<FunctionSpace>(mesh, config.deg_velocity, 2);
  p_space_ = std::make_unique<FunctionSpace>(mesh, config.deg_pressure, 1);
  lambda_space_ = std::make_unique<FunctionSpace>(mesh, config.deg_multiplier, 1);

  const double y_mid = config.box_height / 2.0;
  const double gamma = config.gamma;
  VelocityBC bc;
  for (auto m : {BoundaryMarker::Left, BoundaryMarker::Right, BoundaryMarker::Top,
                 BoundaryMarker::Bottom})
    bc.items.push_back({m, VelocityBC::Kind::Prescribed,
                        [gamma, y_mid](Vec2 x) { return Vec2{gamma * (x.y - y_mid), 0.0}; }});
  velocity_bc_dofs(*u_space_, bc, wall_dofs_, wall_values_);
}

Eigen::VectorXd VesicleStepper::bending_force_load(const LevelSet& ls, double k_B) {
  if (k_B == 0.0) return Eigen::VectorXd::Zero(u_space_->n_dofs());

  const DiscreteField corrected = phi_ops_->corrected_support(ls);
  const GeometryFields gf = phi_ops_->geometry_fields(ls);
  const auto band = phi_ops_->band_elements(ls);
  auto in_band = std::make_shared<std::vector<char>>(mesh_->n_triangles(), 0);
  for (int e : band) (*in_band)[e] = 1;

  const DiscreteField* phi = &ls.phi;
  const DiscreteField* kappa = &gf.curvature;

  // |grad phi| kappa, then its gradient, each L2-projected before composing.
  const DiscreteField w = phi_ops_->scalar_projector().project(
      [phi, kappa](const ElemContext& ctx, int q) {
        return ctx.grad(*phi, q).norm() * ctx.value(*kappa, q);
      });
  const DiscreteField* wp = &w;
  const DiscreteField v = phi_ops_->vector_projector().project2(
      [wp](const ElemContext& ctx, int q) { return ctx.grad(*wp, q); });
  const DiscreteField* vp = &v;

  // X = -kappa^2/2 n + (1/|grad phi|) (I - n n) grad(|grad phi| kappa), whose
  // weak divergence avoids third derivatives of phi.
  auto x_field = [phi, kappa, vp, in_band](const ElemContext& ctx, int q) {
    const Vec2 g = ctx.grad(*phi, q);
    const double floor = (*in_band)[ctx.elem()] ? 0.05 : 0.5;
    const double gn = std::max(g.norm(), floor);
    const Vec2 n = g / gn;
    const double k = ctx.value(*kappa, q);
    const Vec2 vv = ctx.value2(*vp, q);
    const Vec2 tangential = vv - n * n.dot(vv);
    return n * (-0.5 * k * k) + tangential / gn;
  };
  const DiscreteField s = phi_ops_->scalar_projector().project_weak_divergence(x_field);
  const DiscreteField* sp = &s;
  const DiscreteField* cp = &corrected;
  const double eps = ls.eps;

  SystemAssembler asmb({u_space_.get()}, 2 * u_space_->degree() + 4, policy_, bend_plan_);
  asmb.add_vector_load(0, [sp, cp, phi, k_B, eps](const ElemContext& ctx, int q) {
    const double d = delta_eps(ctx.value(*cp, q), eps);
    if (d == 0.0) return Vec2{0.0, 0.0};
    return ctx.grad(*phi, q) * (k_B * ctx.value(*sp, q) * d);
  });
  SparseSystem sys = asmb.assemble();
  bend_plan_ = asmb.plan();
  return sys.rhs;
}

MembraneSolveResult VesicleStepper::solve(const LevelSet& ls) {
  const DiscreteField corrected = phi_ops_->corrected_support(ls);
  const GeometryFields gf = phi_ops_->geometry_fields(ls);
  const DiscreteField* c = &corrected;
  const double eps = ls.eps;
  const double nu1 = config_.nu1, nu2 = config_.nu2;

  const int qd = 2 * u_space_->degree() + 4;
  SystemAssembler asmb({u_space_.get(), p_space_.get(), lambda_space_.get()}, qd, policy_, plan_);
  asmb.add_sym_diffusion(0, 0, [c, eps, nu1, nu2](const ElemContext& ctx, int q) {
    return nu2 + (nu1 - nu2) * heaviside_eps(ctx.value(*c, q), eps);
  });
  asmb.add_div_coupling(0, 1);
  if (config_.multiplier_enabled)
    asmb.add_surface_div_coupling(0, 2, gf.normal, [c, eps](const ElemContext& ctx, int q) {
      return delta_eps(ctx.value(*c, q), eps);
    });
  SparseSystem sys = asmb.assemble();
  plan_ = asmb.plan();

  if (config_.k_B > 0.0) sys.rhs.head(u_space_->n_dofs()) += bending_force_load(ls, config_.k_B);

  std::vector<int> dofs = wall_dofs_;
  std::vector<double> values = wall_values_;
  dofs.push_back(sys.offset(1));  // pressure gauge
  values.push_back(0.0);

  MembraneSolveResult result;
  if (config_.multiplier_enabled) {
    result.band_dofs = multiplier_band_dofs(*phi_ops_, ls, *lambda_space_);
    std::vector<char> in_band(lambda_space_->n_dofs(), 0);
    for (int d : result.band_dofs) in_band[d] = 1;
    for (int d = 0; d < lambda_space_->n_dofs(); ++d)
      if (!in_band[d]) {
        dofs.push_back(sys.offset(2) + d);
        values.push_back(0.0);
      }
  } else {
    for (int d = 0; d < lambda_space_->n_dofs(); ++d) {
      dofs.push_back(sys.offset(2) + d);
      values.push_back(0.0);
    }
  }
  apply_essential_bc(sys, dofs, values);

  Eigen::VectorXd x;
  try {
    x = solver_.solve(sys);
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) +
                       " (inextensible Stokes solve; a too-thin multiplier band can make the "
                       "constraint singular, consider a finer mesh or larger eps)");
  }

  result.u = DiscreteField(*u_space_);
  result.u.coeffs = x.head(u_space_->n_dofs());
  result.p = DiscreteField(*p_space_);
  result.p.coeffs = x.segment(sys.offset(1), p_space_->n_dofs());
  result.lambda = DiscreteField(*lambda_space_);
  result.lambda.coeffs = x.tail(lambda_space_->n_dofs());
  return result;
}

double VesicleStepper::surface_div_residual(const MembraneSolveResult& result, const LevelSet& ls) {
  const DiscreteField corrected = phi_ops_->corrected_support(ls);
  const GeometryFields gf = phi_ops_->geometry_fields(ls);
  const DiscreteField* c = &corrected;
  const double eps = ls.eps;
  SystemAssembler asmb({u_space_.get(), lambda_space_.get()}, 2 * u_space_->degree() + 4, policy_,
                       resid_plan_);
  asmb.add_surface_div_coupling(0, 1, gf.normal, [c, eps](const ElemContext& ctx, int q) {
    return delta_eps(ctx.value(*c, q), eps);
  });
  SparseSystem sys = asmb.assemble();
  resid_plan_ = asmb.plan();
  Eigen::VectorXd full = Eigen::VectorXd::Zero(sys.n_dofs());
  full.head(u_space_->n_dofs()) = result.u.coeffs;
  const Eigen::VectorXd r = (sys.matrix * full).tail(lambda_space_->n_dofs());
  double rmax = 0.0;
  for (int d : result.band_dofs) rmax = std::max(rmax, std::abs(r[d]));
  return rmax;
}

double VesicleStepper::membrane_circulation(const DiscreteField& u, const LevelSet& ls) {
  const DiscreteField corrected = phi_ops_->corrected_support(ls);
  const GeometryFields gf = phi_ops_->geometry_fields(ls);
  const DiscreteField* c = &corrected;
  const DiscreteField* n = &gf.normal;
  const DiscreteField* uf = &u;
  const double eps = ls.eps;
  Integrator integ(*mesh_, 2 * std::max(u.space->degree(), 3) + 4, policy_);
  return integ.integrate([c, n, uf, eps](const ElemContext& ctx, int q) {
    const double d = delta_eps(ctx.value(*c, q), eps);
    if (d == 0.0) return 0.0;
    Vec2 nn = ctx.value2(*n, q);
    const double norm = std::max(nn.norm(), 1e-9);
    const Vec2 t{-nn.y / norm, nn.x / norm};
    return ctx.value2(*uf, q).dot(t) * d;
  });
}

// ---------------------------------------------------------------------------

namespace {

TimeSeries run_vesicle(const VesicleConfig& config, bool unwrap, std::ostream* progress) {
  config.validate();
  const Mesh mesh = generate_rectangle_mesh(config.box_width, config.box_height, config.h);
  const FunctionSpace phi_space(mesh, config.deg_levelset, 1);
  LevelSetOps ops(phi_space);
  LevelSet ls = init_signed_distance(phi_space, config.initial, 1.5 * config.h, config.reinit);
  VesicleStepper stepper(mesh, config, ops);

  TimeSeries series({"t", "angle", "perimeter", "perimeter_loss_pct", "area"});
  double p0 = -1.0;
  double prev_angle = 0.0;
  bool have_prev = false;
  auto record = [&](double t) {
    if (ops.needs_reinit(ls)) ls = reinitialize_fmm(ls);
    const InterfaceMeasures m = ops.interface_measures(ls);
    if (p0 < 0.0) p0 = m.perimeter;
    const InclinationAngle raw = inclination_angle(ops, ls);
    double theta = raw.defined ? raw.angle : prev_angle;
    if (unwrap && have_prev && raw.defined)
      theta += M_PI * std::round((prev_angle - theta) / M_PI);
    prev_angle = theta;
    have_prev = true;
    series.append({t, theta, m.perimeter, 100.0 * std::abs(m.perimeter - p0) / p0, m.area_inside});
    return theta;
  };
  record(0.0);

  const int n_steps = static_cast<int>(std::llround(config.T / config.dt));
  const int progress_every = std::max(1, n_steps / 25);
  for (int step = 1; step <= n_steps; ++step) {
    const double t = step * config.dt;
    MembraneSolveResult result;
    try {
      try {
        result = stepper.solve(ls);
      } catch (const NeedsReinitError&) {
        ls = reinitialize_fmm(ls);
        result = stepper.solve(ls);
      }
      ls = ops.advance(ls, result.u, config.dt, config.stabilization);
    } catch (const NumericError& e) {
      throw NumericError("vesicle run failed at step " + std::to_string(step) + ", t=" +
                         std::to_string(t) + ": " + e.what());
    }
    if (step % config.reinit.cadence == 0 && ops.needs_reinit(ls)) ls = reinitialize_fmm(ls);
    if (step % config.output_every == 0 || step == n_steps) {
      const double theta = record(t);
      if (progress && step % progress_every == 0)
        (*progress) << "step " << step << " t " << t << " angle " << theta << " perimeter_loss% "
                    << series.rows.back()[3] << "\n";
    }
  }
  return series;
}

}  // namespace

TimeSeries run_tank_treading(const VesicleConfig& config, std::ostream* progress) {
  return run_vesicle(config, false, progress);
}

TimeSeries run_tumbling(const VesicleConfig& config, std::ostream* progress) {
  return run_vesicle(config, true, progress);
}

double tumbling_frequency(const TimeSeries& series) {
  const auto t = series.column("t");
  const auto theta = series.column("angle");
  std::vector<double> crossings;
  for (std::size_t i = 0; i + 1 < theta.size(); ++i) {
    const double a = theta[i], b = theta[i + 1];
    int ka = static_cast<int>(std::floor(a / M_PI));
    int kb = static_cast<int>(std::floor(b / M_PI));
    while (ka > kb) {  // decreasing through ka*pi
      const double level = ka * M_PI;
      crossings.push_back(t[i] + (t[i + 1] - t[i]) * (a - level) / std::max(a - b, 1e-300));
      --ka;
    }
    while (ka < kb) {  // increasing through (ka+1)*pi
      const double level = (ka + 1) * M_PI;
      crossings.push_back(t[i] + (t[i + 1] - t[i]) * (level - a) / std::max(b - a, 1e-300));
      ++ka;
    }
  }
  if (crossings.size() < 3)
    throw InvalidStateError("tumbling_frequency: insufficient data, fewer than two pi-periods");
  return (static_cast<double>(crossings.size()) - 1.0) / (crossings.back() - crossings.front());
}

}  // namespace lsfem
