// SPDX-License-Identifier: Apache-2.0
#include "lsfem/twofluid.hpp"

#include <cmath>
#include <ostream>

#include "lsfem/errors.hpp"
#include "lsfem/fmm.hpp"

namespace lsfem {

void FluidParams::validate() const {
  if (!(rho1 > 0.0) || !(rho2 > 0.0)) throw ValidationError("FluidParams: densities must be positive");
  if (!(nu1 > 0.0) || !(nu2 > 0.0)) throw ValidationError("FluidParams: viscosities must be positive");
  if (sigma < 0.0) throw ValidationError("FluidParams: sigma must be non-negative");
}

BubbleNumbers dimensionless_numbers(const FluidParams& params, double r0) {
  params.validate();
  if (!(r0 > 0.0)) throw ValidationError("dimensionless_numbers: r0 must be positive");
  const double g = params.gravity.norm();
  BubbleNumbers n;
  n.Re = params.rho1 * std::sqrt(g * (2.0 * r0) * (2.0 * r0) * (2.0 * r0)) / params.nu1;
  n.E0 = 4.0 * params.rho1 * g * r0 * r0 / params.sigma;
  return n;
}

DiscreteField mixture_field(const LevelSetOps& ops, const LevelSet& ls, double v1, double v2) {
  const DiscreteField corrected = ops.corrected_support(ls);
  DiscreteField out(ops.scalar_space());
  for (int i = 0; i < out.coeffs.size(); ++i)
    out.coeffs[i] = v2 + (v1 - v2) * heaviside_eps(corrected.coeffs[i], ls.eps);
  return out;
}

void velocity_bc_dofs(const FunctionSpace& u_space, const VelocityBC& bc, std::vector<int>& dofs,
                      std::vector<double>& values) {
  dofs.clear();
  values.clear();
  std::vector<char> seen(u_space.n_dofs(), 0);
  for (const auto& item : bc.items) {
    for (const auto& be : boundary_facets(u_space.mesh(), item.marker)) {
      for (int node : u_space.edge_nodes(be.v0, be.v1)) {
        const Vec2 x = u_space.node_coord(node);
        switch (item.kind) {
          case VelocityBC::Kind::NoSlip:
            for (int c = 0; c < 2; ++c) {
              const int d = u_space.dof(node, c);
              if (!seen[d]) {
                seen[d] = 1;
                dofs.push_back(d);
                values.push_back(0.0);
              }
            }
            break;
          case VelocityBC::Kind::NormalZero: {
            const int c =
                (item.marker == BoundaryMarker::Left || item.marker == BoundaryMarker::Right) ? 0 : 1;
            const int d = u_space.dof(node, c);
            if (!seen[d]) {
              seen[d] = 1;
              dofs.push_back(d);
              values.push_back(0.0);
            }
            break;
          }
          case VelocityBC::Kind::Prescribed: {
            const Vec2 v = item.value(x);
            const double comp[2] = {v.x, v.y};
            for (int c = 0; c < 2; ++c) {
              const int d = u_space.dof(node, c);
              if (!seen[d]) {
                seen[d] = 1;
                dofs.push_back(d);
                values.push_back(comp[c]);
              }
            }
            break;
          }
        }
      }
    }
  }
}

TwoFluidStepper::TwoFluidStepper(const FunctionSpace& u_space, const FunctionSpace& p_space,
                                 LevelSetOps& ls_ops, FluidParams params, VelocityBC bc,
                                 ExecPolicy policy)
    : u_space_(&u_space),
      p_space_(&p_space),
      ls_ops_(&ls_ops),
      params_(params),
      bc_(std::move(bc)),
      policy_(policy),
      solver_(1e-10) {
  params_.validate();
  if (u_space.components() != 2 || p_space.components() != 1)
    throw ValidationError("TwoFluidStepper: need a vector velocity and scalar pressure space");
  velocity_bc_dofs(u_space, bc_, bc_dofs_, bc_values_);
  pressure_pin_ = u_space.n_dofs();  // first pressure dof in the block layout
}

FluidState TwoFluidStepper::initial_state() const {
  FluidState s;
  s.u = DiscreteField(*u_space_);
  s.p = DiscreteField(*p_space_);
  s.t = 0.0;
  return s;
}

Eigen::VectorXd TwoFluidStepper::surface_tension_load(const LevelSet& ls) const {
  if (params_.sigma == 0.0) return Eigen::VectorXd::Zero(u_space_->n_dofs());
  const DiscreteField corrected = ls_ops_->corrected_support(ls);
  const GeometryFields gf = ls_ops_->geometry_fields(ls);
  const double sigma = params_.sigma;
  const double eps = ls.eps;
  const DiscreteField* c = &corrected;
  const DiscreteField* kappa = &gf.curvature;
  const DiscreteField* normal = &gf.normal;

  const int qd = 2 * u_space_->degree() + 4;
  SystemAssembler asmb({u_space_}, qd, policy_, st_plan_);
  asmb.add_vector_load(0, [=](const ElemContext& ctx, int q) {
    const double d = delta_eps(ctx.value(*c, q), eps);
    if (d == 0.0) return Vec2{0.0, 0.0};
    return ctx.value2(*normal, q) * (sigma * ctx.value(*kappa, q) * d);
  });
  SparseSystem sys = asmb.assemble();
  st_plan_ = asmb.plan();
  return sys.rhs;
}

FluidState TwoFluidStepper::step(const FluidState& state, const LevelSet& ls, double dt) {
  if (!(dt > 0.0)) throw ValidationError("TwoFluidStepper: dt must be positive");
  const DiscreteField corrected = ls_ops_->corrected_support(ls);
  const DiscreteField* c = &corrected;
  const DiscreteField* u_prev = &state.u;
  const FluidParams par = params_;
  const double eps = ls.eps;

  auto rho = [par, c, eps](const ElemContext& ctx, int q) {
    return par.rho2 + (par.rho1 - par.rho2) * heaviside_eps(ctx.value(*c, q), eps);
  };
  auto nu = [par, c, eps](const ElemContext& ctx, int q) {
    return par.nu2 + (par.nu1 - par.nu2) * heaviside_eps(ctx.value(*c, q), eps);
  };

  const int qd = 2 * u_space_->degree() + 2;
  SystemAssembler asmb({u_space_, p_space_}, qd, policy_, plan_);
  asmb.add_mass(0, 0, [rho, dt](const ElemContext& ctx, int q) { return rho(ctx, q) / dt; });
  asmb.add_advection(0, 0, state.u, rho);
  asmb.add_sym_diffusion(0, 0, nu);
  asmb.add_div_coupling(0, 1);
  asmb.add_vector_load(0, [rho, dt, par, u_prev](const ElemContext& ctx, int q) {
    const double r = rho(ctx, q);
    return ctx.value2(*u_prev, q) * (r / dt) + par.gravity * r;
  });
  SparseSystem sys = asmb.assemble();
  plan_ = asmb.plan();

  if (params_.sigma != 0.0) sys.rhs.head(u_space_->n_dofs()) += surface_tension_load(ls);

  std::vector<int> dofs = bc_dofs_;
  std::vector<double> values = bc_values_;
  dofs.push_back(pressure_pin_);
  values.push_back(0.0);
  apply_essential_bc(sys, dofs, values);

  const Eigen::VectorXd x = solver_.solve(sys);

  FluidState next;
  next.u = DiscreteField(*u_space_);
  next.u.coeffs = x.head(u_space_->n_dofs());
  next.p = DiscreteField(*p_space_);
  next.p.coeffs = x.tail(p_space_->n_dofs());
  next.t = state.t + dt;

  // Report pressure in the zero-mean gauge.
  Integrator integ(u_space_->mesh(), 2 * p_space_->degree(), policy_);
  const DiscreteField* pf = &next.p;
  const double pmean =
      integ.integrate([pf](const ElemContext& ctx, int q) { return ctx.value(*pf, q); }) /
      mesh_statistics(u_space_->mesh()).total_area;
  next.p.coeffs.array() -= pmean;
  return next;
}

double TwoFluidStepper::divergence_residual_linf(const FluidState& state) const {
  SystemAssembler asmb({u_space_, p_space_}, 2 * u_space_->degree() + 2, policy_, div_plan_);
  asmb.add_div_coupling(0, 1);
  SparseSystem sys = asmb.assemble();
  div_plan_ = asmb.plan();
  Eigen::VectorXd full = Eigen::VectorXd::Zero(sys.n_dofs());
  full.head(u_space_->n_dofs()) = state.u.coeffs;
  return (sys.matrix * full).tail(p_space_->n_dofs()).lpNorm<Eigen::Infinity>();
}

FluidParams BubbleBenchmarkConfig::params() const {
  FluidParams p;
  if (test == 1) {
    p = {1000.0, 100.0, 10.0, 1.0, 24.5, {0.0, -0.98}};
  } else if (test == 2) {
    p = {1000.0, 1.0, 10.0, 0.1, 1.96, {0.0, -0.98}};
  } else {
    throw ValidationError("BubbleBenchmarkConfig: test must be 1 or 2");
  }
  return p;
}

void BubbleBenchmarkConfig::validate() const {
  params();
  if (!(h > 0.0) || !(dt > 0.0) || !(T > 0.0))
    throw ValidationError("BubbleBenchmarkConfig: h, dt, T must be positive");
  if (output_every < 1) throw ValidationError("BubbleBenchmarkConfig: output_every must be >= 1");
}

TimeSeries run_bubble_benchmark(const BubbleBenchmarkConfig& config, std::ostream* progress,
                                const SnapshotCallback& snapshot) {
  config.validate();
  const Mesh mesh = generate_rectangle_mesh(1.0, 2.0, config.h);
  const FunctionSpace u_space(mesh, 2, 2);
  const FunctionSpace p_space(mesh, 1, 1);
  const FunctionSpace phi_space(mesh, 1, 1);
  LevelSetOps ls_ops(phi_space);

  LevelSet ls = init_signed_distance(phi_space, CircleShape{{0.5, 0.5}, 0.25}, 1.5 * config.h,
                                     config.reinit);

  VelocityBC bc;
  bc.items = {{BoundaryMarker::Left, VelocityBC::Kind::NormalZero, {}},
              {BoundaryMarker::Right, VelocityBC::Kind::NormalZero, {}},
              {BoundaryMarker::Top, VelocityBC::Kind::NoSlip, {}},
              {BoundaryMarker::Bottom, VelocityBC::Kind::NoSlip, {}}};

  TwoFluidStepper stepper(u_space, p_space, ls_ops, config.params(), bc);
  FluidState state = stepper.initial_state();

  TimeSeries series({"t", "circularity", "y_c", "u_c", "perimeter", "area"});
  auto record = [&](double t) {
    LevelSet measured = ls;
    if (ls_ops.needs_reinit(measured)) {
      measured = reinitialize_fmm(measured);
      ls = measured;
    }
    const InterfaceMeasures m = ls_ops.interface_measures(measured);
    const Vec2 uc = ls_ops.mean_velocity(measured, state.u);
    series.append({t, m.circularity, m.center_of_mass.y, uc.y, m.perimeter, m.area_inside});
    return m;
  };
  record(0.0);

  const int n_steps = static_cast<int>(std::llround(config.T / config.dt));
  const int progress_every = std::max(1, n_steps / 30);
  for (int step = 1; step <= n_steps; ++step) {
    const double t = step * config.dt;
    try {
      try {
        state = stepper.step(state, ls, config.dt);
      } catch (const NeedsReinitError&) {
        ls = reinitialize_fmm(ls);
        state = stepper.step(state, ls, config.dt);
      }
      ls = ls_ops.advance(ls, state.u, config.dt, config.stabilization);
    } catch (const NumericError& e) {
      throw NumericError("bubble benchmark failed at step " + std::to_string(step) + ", t=" +
                         std::to_string(t) + ": " + e.what());
    }
    if (step % config.reinit.cadence == 0 && ls_ops.needs_reinit(ls)) ls = reinitialize_fmm(ls);
    if (step % config.output_every == 0 || step == n_steps) {
      const InterfaceMeasures m = record(t);
      if (progress && step % progress_every == 0)
        (*progress) << "step " << step << " t " << t << " circularity " << m.circularity << " y_c "
                    << m.center_of_mass.y << "\n";
      if (snapshot) snapshot(step, state, ls);
    }
  }
  return series;
}

}  // namespace lsfem
