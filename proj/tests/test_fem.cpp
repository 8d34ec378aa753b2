// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "lsfem/assembly.hpp"
#include "lsfem/errors.hpp"
#include "lsfem/field.hpp"
#include "lsfem/geometry.hpp"
#include "lsfem/solver.hpp"
#include "lsfem/space.hpp"

using namespace lsfem;

namespace {

// Unit square split along the main diagonal; smallest conforming mesh.
Mesh two_triangle_square() {
  Mesh mesh;
  mesh.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  mesh.boundary_edges = {{0, 1, BoundaryMarker::Bottom},
                         {1, 2, BoundaryMarker::Right},
                         {2, 3, BoundaryMarker::Top},
                         {3, 0, BoundaryMarker::Left}};
  mesh.target_h = 1.0;
  return mesh;
}

double l2_error(const DiscreteField& f, const std::function<double(Vec2)>& exact, int quad_deg) {
  Integrator integ(f.space->mesh(), quad_deg);
  const double err2 = integ.integrate([&](const ElemContext& ctx, int q) {
    const double d = ctx.value(f, q) - exact(ctx.x(q));
    return d * d;
  });
  return std::sqrt(err2);
}

// Series solution of -lap u = 1 on the unit square with u = 0 on the boundary.
double poisson_unit_square_center() {
  double sum = 0.0;
  for (int m = 1; m < 400; m += 2)
    for (int n = 1; n < 400; n += 2) {
      const double smn = ((m - 1) / 2 % 2 == 0 ? 1.0 : -1.0) * ((n - 1) / 2 % 2 == 0 ? 1.0 : -1.0);
      sum += 16.0 / (M_PI * M_PI * M_PI * M_PI * m * n * (m * m + n * n)) * smn;
    }
  return sum;
}

}  // namespace

TEST_CASE("Lagrange dof counts on the two-triangle square") {
  Mesh mesh = two_triangle_square();
  CHECK(build_space(mesh, 1, 1).n_dofs() == 4);
  CHECK(build_space(mesh, 2, 1).n_dofs() == 9);
  CHECK(build_space(mesh, 2, 2).n_dofs() == 18);
  CHECK(build_space(mesh, 3, 1).n_dofs() == 4 + 2 * 5 + 2);
  CHECK_THROWS_AS(build_space(mesh, 4, 1), ValidationError);
  CHECK_THROWS_AS(build_space(mesh, 2, 3), ValidationError);
}

TEST_CASE("interpolation reproduces polynomials up to the space degree") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.21);
  FunctionSpace p1(mesh, 1, 1), p2(mesh, 2, 1), p3(mesh, 3, 1);

  DiscreteField fx = interpolate(p1, std::function<double(Vec2)>([](Vec2 p) { return p.x; }));
  CHECK(fx.value({0.5, 0.5}) == doctest::Approx(0.5).epsilon(1e-14));

  auto quad = std::function<double(Vec2)>([](Vec2 p) { return p.x * p.x; });
  DiscreteField fq = interpolate(p2, quad);
  for (Vec2 p : {Vec2{0.13, 0.77}, Vec2{0.6, 0.4}, Vec2{0.95, 0.05}})
    CHECK(fq.value(p) == doctest::Approx(p.x * p.x).epsilon(1e-13));

  auto cubic = std::function<double(Vec2)>(
      [](Vec2 p) { return p.x * p.x * p.x - 2.0 * p.x * p.y * p.y + 0.5 * p.y; });
  DiscreteField fc = interpolate(p3, cubic);
  for (Vec2 p : {Vec2{0.3, 0.3}, Vec2{0.81, 0.13}})
    CHECK(fc.value(p) == doctest::Approx(cubic(p)).epsilon(1e-12));
}

TEST_CASE("P1 interpolation of x^2 converges at second order in L2") {
  auto exact = std::function<double(Vec2)>([](Vec2 p) { return p.x * p.x; });
  double prev = 0.0;
  std::vector<double> errs;
  for (double h : {0.2, 0.1, 0.05}) {
    Mesh mesh = generate_rectangle_mesh(1.0, 1.0, h);
    FunctionSpace p1(mesh, 1, 1);
    errs.push_back(l2_error(interpolate(p1, exact), exact, 6));
  }
  CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.15));
  CHECK(errs[1] / errs[2] == doctest::Approx(4.0).epsilon(0.15));
  (void)prev;
}

TEST_CASE("L2 projection of a constant and idempotence") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.15);
  FunctionSpace p2(mesh, 2, 1);
  L2Projector proj(p2, 6);
  DiscreteField c = proj.project([](const ElemContext&, int) { return 3.0; });
  for (int i = 0; i < c.coeffs.size(); ++i) CHECK(c.coeffs[i] == doctest::Approx(3.0).epsilon(1e-11));

  // Projecting a projected field changes nothing.
  DiscreteField f = proj.project([](const ElemContext& ctx, int q) {
    const Vec2 p = ctx.x(q);
    return std::sin(3.0 * p.x) * p.y;
  });
  DiscreteField f2 = proj.project([&](const ElemContext& ctx, int q) { return ctx.value(f, q); });
  CHECK((f.coeffs - f2.coeffs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("projected normals and curvature of a circular signed distance") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.02);
  FunctionSpace scalar(mesh, 2, 1), vector(mesh, 2, 2);
  const Vec2 center{0.5, 0.5};
  DiscreteField phi = interpolate(
      scalar, std::function<double(Vec2)>([&](Vec2 p) { return (p - center).norm() - 0.25; }));

  L2Projector vproj(vector, 8);
  DiscreteField normal = vproj.project2([&](const ElemContext& ctx, int q) {
    const Vec2 g = ctx.grad(phi, q);
    return g / std::max(g.norm(), 1e-12);
  });
  const Vec2 n = normal.value2({0.75, 0.5});
  CHECK(n.x == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(n.y) < 0.02);

  L2Projector sproj(scalar, 8);
  DiscreteField curv = sproj.project([&](const ElemContext& ctx, int q) {
    const Mat2 gn = ctx.grad2(normal, q);
    return gn.trace();
  });
  // kappa = 1/r = 4 on the interface.
  for (double angle : {0.0, 0.5, 1.3, 2.8, 4.0}) {
    const Vec2 p = center + Vec2{0.25 * std::cos(angle), 0.25 * std::sin(angle)};
    CHECK(curv.value(p) == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("mass matrix: partition of unity, symmetry, positivity") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.3);
  FunctionSpace p1(mesh, 1, 1);
  SystemAssembler asmb({&p1}, 4);
  asmb.add_mass(0, 0);
  SparseSystem sys = asmb.assemble();
  CHECK(Eigen::VectorXd::Ones(p1.n_dofs()).dot(sys.matrix * Eigen::VectorXd::Ones(p1.n_dofs())) ==
        doctest::Approx(1.0).epsilon(1e-12));

  Eigen::SparseMatrix<double> diff = Eigen::SparseMatrix<double>(sys.matrix.transpose()) - sys.matrix;
  CHECK(diff.coeffs().abs().maxCoeff() < 1e-15);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(p1.n_dofs());
    for (int i = 0; i < x.size(); ++i) x[i] = dist(rng);
    CHECK(x.dot(sys.matrix * x) > 0.0);
  }
}

TEST_CASE("stiffness matrix annihilates constants") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.3);
  FunctionSpace p2(mesh, 2, 1);
  SystemAssembler asmb({&p2}, 4);
  asmb.add_stiffness(0, 0);
  SparseSystem sys = asmb.assemble();
  Eigen::VectorXd r = sys.matrix * Eigen::VectorXd::Ones(p2.n_dofs());
  CHECK(r.lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("divergence block vanishes on a divergence-free field") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.2);
  FunctionSpace u_space(mesh, 2, 2), p_space(mesh, 1, 1);
  SystemAssembler asmb({&u_space, &p_space}, 5);
  asmb.add_div_coupling(0, 1);
  SparseSystem sys = asmb.assemble();
  DiscreteField u =
      interpolate(u_space, std::function<Vec2(Vec2)>([](Vec2 p) { return Vec2{p.x, -p.y}; }));
  Eigen::VectorXd full = Eigen::VectorXd::Zero(sys.n_dofs());
  full.head(u_space.n_dofs()) = u.coeffs;
  Eigen::VectorXd r = sys.matrix * full;
  CHECK(r.tail(p_space.n_dofs()).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("Taylor-Hood divergence residual of an interpolated solenoidal field converges") {
  auto stream_velocity = std::function<Vec2(Vec2)>([](Vec2 p) {
    return Vec2{M_PI * std::sin(M_PI * p.x) * std::cos(M_PI * p.y),
                -M_PI * std::cos(M_PI * p.x) * std::sin(M_PI * p.y)};
  });
  // The residual of the Taylor-Hood interpolant is already at machine
  // precision on straight triangles, so refinement keeps it at zero.
  for (double h : {0.2, 0.1, 0.05}) {
    Mesh mesh = generate_rectangle_mesh(1.0, 1.0, h);
    FunctionSpace u_space(mesh, 2, 2), p_space(mesh, 1, 1);
    SystemAssembler asmb({&u_space, &p_space}, 6);
    asmb.add_div_coupling(0, 1);
    SparseSystem sys = asmb.assemble();
    DiscreteField u = interpolate(u_space, stream_velocity);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(sys.n_dofs());
    full.head(u_space.n_dofs()) = u.coeffs;
    CHECK((sys.matrix * full).tail(p_space.n_dofs()).norm() < 1e-12);
  }
}

TEST_CASE("Poisson problem hits the series-solution center value") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.05);
  FunctionSpace p2(mesh, 2, 1);
  SystemAssembler asmb({&p2}, 4);
  asmb.add_stiffness(0, 0);
  asmb.add_load(0, [](const ElemContext&, int) { return 1.0; });
  SparseSystem sys = asmb.assemble();

  std::vector<int> bdofs;
  for (auto m : {BoundaryMarker::Left, BoundaryMarker::Right, BoundaryMarker::Top, BoundaryMarker::Bottom}) {
    auto d = boundary_dofs(p2, m);
    bdofs.insert(bdofs.end(), d.begin(), d.end());
  }
  apply_essential_bc(sys, bdofs, std::vector<double>(bdofs.size(), 0.0));

  DiscreteField u(p2);
  u.coeffs = solve_linear(sys);
  const double reference = poisson_unit_square_center();
  CHECK(reference == doctest::Approx(0.0736713).epsilon(2e-5));
  CHECK(u.value({0.5, 0.5}) == doctest::Approx(reference).epsilon(2e-4));
  // Constrained rows restate the boundary values exactly.
  for (int d : bdofs) CHECK(u.coeffs[d] == 0.0);
}

TEST_CASE("constraining every dof returns the boundary data verbatim") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.3);
  FunctionSpace p1(mesh, 1, 1);
  SystemAssembler asmb({&p1}, 2);
  asmb.add_mass(0, 0);
  SparseSystem sys = asmb.assemble();
  std::vector<int> dofs(p1.n_dofs());
  std::vector<double> vals(p1.n_dofs());
  for (int i = 0; i < p1.n_dofs(); ++i) {
    dofs[i] = i;
    vals[i] = 0.1 * i;
  }
  apply_essential_bc(sys, dofs, vals);
  Eigen::VectorXd x = solve_linear(sys);
  for (int i = 0; i < p1.n_dofs(); ++i) CHECK(x[i] == doctest::Approx(vals[i]).epsilon(1e-14));
}

TEST_CASE("constraining no dofs leaves the system unchanged") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.3);
  FunctionSpace p1(mesh, 1, 1);
  SystemAssembler asmb({&p1}, 2);
  asmb.add_mass(0, 0);
  SparseSystem sys = asmb.assemble();
  Eigen::SparseMatrix<double> before = sys.matrix;
  apply_essential_bc(sys, {}, {});
  CHECK((Eigen::SparseMatrix<double>(sys.matrix - before)).coeffs().abs().sum() == 0.0);
}

TEST_CASE("solve_linear handles identity and 2x2 saddle systems") {
  SparseSystem sys;
  sys.matrix.resize(3, 3);
  sys.matrix.setIdentity();
  sys.rhs = Eigen::Vector3d(1.0, 2.0, 3.0);
  sys.block_offsets = {0, 3};
  Eigen::VectorXd x = solve_linear(sys);
  CHECK((x - sys.rhs).norm() == 0.0);

  SparseSystem saddle;
  saddle.matrix.resize(2, 2);
  std::vector<Eigen::Triplet<double>> t{{0, 1, 1.0}, {1, 0, 1.0}};
  saddle.matrix.setFromTriplets(t.begin(), t.end());
  saddle.rhs = Eigen::Vector2d(1.0, 2.0);
  saddle.block_offsets = {0, 2};
  Eigen::VectorXd y = solve_linear(saddle);
  CHECK(y[0] == doctest::Approx(2.0));
  CHECK(y[1] == doctest::Approx(1.0));
}

TEST_CASE("singular matrix raises a numeric error with pivot context") {
  SparseSystem sys;
  sys.matrix.resize(2, 2);
  std::vector<Eigen::Triplet<double>> t{{0, 0, 1.0}};
  sys.matrix.setFromTriplets(t.begin(), t.end());
  sys.rhs = Eigen::Vector2d(1.0, 1.0);
  sys.block_offsets = {0, 2};
  CHECK_THROWS_AS(solve_linear(sys), NumericError);
}

TEST_CASE("Stokes Couette flow is reproduced exactly") {
  const double gamma = 1.5;
  Mesh mesh = generate_rectangle_mesh(2.0, 1.0, 0.2);
  FunctionSpace u_space(mesh, 2, 2), p_space(mesh, 1, 1);
  SystemAssembler asmb({&u_space, &p_space}, 6);
  asmb.add_sym_diffusion(0, 0, [](const ElemContext&, int) { return 1.0; });
  asmb.add_div_coupling(0, 1);
  SparseSystem sys = asmb.assemble();

  std::vector<int> dofs;
  std::vector<double> vals;
  for (auto m : {BoundaryMarker::Left, BoundaryMarker::Right, BoundaryMarker::Top, BoundaryMarker::Bottom}) {
    for (const auto& be : boundary_facets(mesh, m)) {
      for (int node : u_space.edge_nodes(be.v0, be.v1)) {
        dofs.push_back(u_space.dof(node, 0));
        vals.push_back(gamma * u_space.node_coord(node).y);
        dofs.push_back(u_space.dof(node, 1));
        vals.push_back(0.0);
      }
    }
  }
  dofs.push_back(sys.offset(1));  // pin one pressure dof
  vals.push_back(0.0);
  apply_essential_bc(sys, dofs, vals);

  Eigen::VectorXd x = solve_linear(sys);
  DiscreteField u(u_space);
  u.coeffs = x.head(u_space.n_dofs());
  for (Vec2 p : {Vec2{0.31, 0.5}, Vec2{1.1, 0.23}, Vec2{1.73, 0.91}}) {
    const Vec2 v = u.value2(p);
    CHECK(v.x == doctest::Approx(gamma * p.y).epsilon(1e-8));
    CHECK(std::abs(v.y) < 1e-8);
  }
}

TEST_CASE("serial and OpenMP assembly produce bitwise identical systems") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.11);
  FunctionSpace u_space(mesh, 2, 2), p_space(mesh, 1, 1);
  DiscreteField beta =
      interpolate(u_space, std::function<Vec2(Vec2)>([](Vec2 p) { return Vec2{p.y, -p.x}; }));

  auto build = [&](ExecPolicy policy) {
    SystemAssembler asmb({&u_space, &p_space}, 6, policy);
    asmb.add_mass(0, 0, [](const ElemContext& ctx, int q) { return 1.0 + ctx.x(q).x; });
    asmb.add_sym_diffusion(0, 0, [](const ElemContext&, int) { return 0.7; });
    asmb.add_advection(0, 0, beta);
    asmb.add_div_coupling(0, 1);
    asmb.add_vector_load(0, [](const ElemContext& ctx, int q) { return Vec2{ctx.x(q).y, 1.0}; });
    return asmb.assemble();
  };
  SparseSystem a = build(ExecPolicy::Serial);
  SparseSystem b = build(ExecPolicy::OpenMP);
  REQUIRE(a.matrix.nonZeros() == b.matrix.nonZeros());
  for (long k = 0; k < a.matrix.nonZeros(); ++k)
    CHECK(a.matrix.valuePtr()[k] == b.matrix.valuePtr()[k]);
  for (int i = 0; i < a.rhs.size(); ++i) CHECK(a.rhs[i] == b.rhs[i]);
}

TEST_CASE("assembly plan reuse reproduces the matrix bitwise") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.15);
  FunctionSpace p2(mesh, 2, 1);
  std::shared_ptr<AssemblyPlan> plan;
  Eigen::SparseMatrix<double> first;
  for (int pass = 0; pass < 3; ++pass) {
    SystemAssembler asmb({&p2}, 4, ExecPolicy::OpenMP, plan);
    asmb.add_mass(0, 0);
    asmb.add_stiffness(0, 0, [](const ElemContext&, int) { return 2.0; });
    SparseSystem sys = asmb.assemble();
    plan = asmb.plan();
    if (pass == 0) {
      first = sys.matrix;
    } else {
      REQUIRE(sys.matrix.nonZeros() == first.nonZeros());
      for (long k = 0; k < first.nonZeros(); ++k)
        CHECK(sys.matrix.valuePtr()[k] == first.valuePtr()[k]);
    }
  }
}

TEST_CASE("frozen LU solver tracks a drifting matrix with few refactorizations") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.1);
  FunctionSpace p1(mesh, 1, 1);
  FrozenLuSolver solver(1e-11);
  std::shared_ptr<AssemblyPlan> plan;
  for (int step = 0; step < 20; ++step) {
    const double eps = 1e-3 * step;
    SystemAssembler asmb({&p1}, 4, ExecPolicy::OpenMP, plan);
    asmb.add_mass(0, 0, [eps](const ElemContext& ctx, int q) { return 1.0 + eps * ctx.x(q).x; });
    asmb.add_stiffness(0, 0);
    asmb.add_load(0, [](const ElemContext& ctx, int q) { return ctx.x(q).y; });
    SparseSystem sys = asmb.assemble();
    plan = asmb.plan();
    Eigen::VectorXd x = solver.solve(sys);
    CHECK((sys.rhs - sys.matrix * x).norm() <= 1e-11 * sys.rhs.norm() * 1.0001);
  }
  CHECK(solver.factorization_count() < 6);
}
