// SPDX-License-Identifier: Apache-2.0
#include "lsfem/field.hpp"

#include "lsfem/errors.hpp"

namespace lsfem {

Vec2 to_reference(const Mesh& mesh, int elem, const Vec2& p) {
  const auto& tri = mesh.triangles[elem];
  const Vec2& a = mesh.vertices[tri[0]];
  const Mat2 J{mesh.vertices[tri[1]].x - a.x, mesh.vertices[tri[2]].x - a.x,
               mesh.vertices[tri[1]].y - a.y, mesh.vertices[tri[2]].y - a.y};
  return J.inverse().apply(p - a);
}

namespace {
int locate_or_throw(const Mesh& mesh, const Vec2& p) {
  const int elem = mesh.locate(p);
  if (elem < 0) throw ValidationError("field evaluation: point outside mesh");
  return elem;
}
}  // namespace

double DiscreteField::value_on(int elem, const Vec2& ref, int comp) const {
  const ReferenceBasis& basis = reference_basis(space->degree());
  double n[10];
  basis.values(ref, n);
  double v = 0.0;
  const auto nodes = space->element_nodes(elem);
  for (int i = 0; i < space->nodes_per_elem(); ++i) v += n[i] * coeffs[space->dof(nodes[i], comp)];
  return v;
}

Vec2 DiscreteField::gradient_on(int elem, const Vec2& ref, int comp) const {
  const ReferenceBasis& basis = reference_basis(space->degree());
  Vec2 g[10];
  basis.gradients(ref, g);
  const Mesh& mesh = space->mesh();
  const auto& tri = mesh.triangles[elem];
  const Vec2& a = mesh.vertices[tri[0]];
  const Mat2 J{mesh.vertices[tri[1]].x - a.x, mesh.vertices[tri[2]].x - a.x,
               mesh.vertices[tri[1]].y - a.y, mesh.vertices[tri[2]].y - a.y};
  const Mat2 JinvT = J.inverse().transpose();
  Vec2 grad{0.0, 0.0};
  const auto nodes = space->element_nodes(elem);
  for (int i = 0; i < space->nodes_per_elem(); ++i)
    grad += JinvT.apply(g[i]) * coeffs[space->dof(nodes[i], comp)];
  return grad;
}

double DiscreteField::value(const Vec2& p, int comp) const {
  const int elem = locate_or_throw(space->mesh(), p);
  return value_on(elem, to_reference(space->mesh(), elem, p), comp);
}

Vec2 DiscreteField::value2(const Vec2& p) const {
  const int elem = locate_or_throw(space->mesh(), p);
  const Vec2 ref = to_reference(space->mesh(), elem, p);
  return {value_on(elem, ref, 0), value_on(elem, ref, 1)};
}

Vec2 DiscreteField::gradient(const Vec2& p, int comp) const {
  const int elem = locate_or_throw(space->mesh(), p);
  return gradient_on(elem, to_reference(space->mesh(), elem, p), comp);
}

DiscreteField interpolate(const FunctionSpace& space, const std::function<double(Vec2)>& f) {
  DiscreteField out(space);
  for (int n = 0; n < space.n_nodes(); ++n) out.coeffs[space.dof(n, 0)] = f(space.node_coord(n));
  return out;
}

DiscreteField interpolate(const FunctionSpace& space, const std::function<Vec2(Vec2)>& f) {
  if (space.components() != 2) throw ValidationError("interpolate: vector space required");
  DiscreteField out(space);
  for (int n = 0; n < space.n_nodes(); ++n) {
    const Vec2 v = f(space.node_coord(n));
    out.coeffs[space.dof(n, 0)] = v.x;
    out.coeffs[space.dof(n, 1)] = v.y;
  }
  return out;
}

}  // namespace lsfem
