// SPDX-License-Identifier: Apache-2.0
#include "lsfem/space.hpp"

#include <algorithm>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace {
std::uint64_t edge_key(int v0, int v1) {
  if (v0 > v1) std::swap(v0, v1);
  return (static_cast<std::uint64_t>(v0) << 32) | static_cast<std::uint32_t>(v1);
}
constexpr int kEdgeVerts[3][2] = {{0, 1}, {1, 2}, {2, 0}};
}  // namespace

FunctionSpace::FunctionSpace(const Mesh& mesh, int degree, int components)
    : mesh_(&mesh), degree_(degree), components_(components), npe_(nodes_per_element(degree)) {
  if (degree < 1 || degree > 3) throw ValidationError("build_space: degree must be 1, 2 or 3");
  if (components < 1 || components > 2)
    throw ValidationError("build_space: components must be 1 or 2");

  const int nv = mesh.n_vertices();
  const int nt = mesh.n_triangles();
  const int per_edge = degree - 1;
  const int per_elem_interior = (degree - 1) * (degree - 2) / 2;

  // Enumerate global edges in order of first appearance.
  std::vector<std::array<int, 2>> edges;
  edge_lookup_.reserve(static_cast<std::size_t>(nt) * 2);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    for (const auto& ev : kEdgeVerts) {
      int a = tri[ev[0]], b = tri[ev[1]];
      if (a > b) std::swap(a, b);
      if (edge_lookup_.emplace(edge_key(a, b), static_cast<int>(edges.size())).second)
        edges.push_back({a, b});
    }
  }
  n_edges_ = static_cast<int>(edges.size());
  n_nodes_ = nv + n_edges_ * per_edge + nt * per_elem_interior;

  node_coords_.resize(n_nodes_);
  std::copy(mesh.vertices.begin(), mesh.vertices.end(), node_coords_.begin());
  for (int e = 0; e < n_edges_; ++e) {
    const Vec2& p0 = mesh.vertices[edges[e][0]];
    const Vec2& p1 = mesh.vertices[edges[e][1]];
    for (int t = 0; t < per_edge; ++t) {
      const double s = static_cast<double>(t + 1) / degree;
      node_coords_[nv + e * per_edge + t] = p0 * (1.0 - s) + p1 * s;
    }
  }

  elem_nodes_.resize(static_cast<std::size_t>(nt) * npe_);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    int* dst = elem_nodes_.data() + static_cast<std::size_t>(t) * npe_;
    dst[0] = tri[0];
    dst[1] = tri[1];
    dst[2] = tri[2];
    int pos = 3;
    for (const auto& ev : kEdgeVerts) {
      const int a = tri[ev[0]], b = tri[ev[1]];
      const int e = edge_lookup_.at(edge_key(a, b));
      for (int i = 1; i <= per_edge; ++i) {
        // Local node i sits at fraction i/k from a; stored edge nodes run from
        // the lower-index vertex.
        const int slot = (a < b) ? (i - 1) : (per_edge - i);
        dst[pos++] = nv + e * per_edge + slot;
      }
    }
    if (per_elem_interior == 1) {
      const int node = nv + n_edges_ * per_edge + t;
      node_coords_[node] =
          (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
      dst[pos++] = node;
    }
  }
}

int FunctionSpace::edge_index(int v0, int v1) const {
  auto it = edge_lookup_.find(edge_key(v0, v1));
  return it == edge_lookup_.end() ? -1 : it->second;
}

std::vector<int> FunctionSpace::edge_nodes(int v0, int v1) const {
  std::vector<int> out = {v0, v1};
  const int e = edge_index(v0, v1);
  if (e < 0) throw ValidationError("edge_nodes: not an edge of the mesh");
  const int per_edge = degree_ - 1;
  for (int t = 0; t < per_edge; ++t) out.push_back(mesh_->n_vertices() + e * per_edge + t);
  return out;
}

FunctionSpace build_space(const Mesh& mesh, int degree, int components) {
  return FunctionSpace(mesh, degree, components);
}

std::vector<int> boundary_dofs(const FunctionSpace& space, BoundaryMarker marker, int component) {
  std::vector<int> dofs;
  for (const auto& be : space.mesh().boundary_edges) {
    if (be.marker != marker) continue;
    for (int node : space.edge_nodes(be.v0, be.v1)) {
      if (component < 0) {
        for (int c = 0; c < space.components(); ++c) dofs.push_back(space.dof(node, c));
      } else {
        dofs.push_back(space.dof(node, component));
      }
    }
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

}  // namespace lsfem
