// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "lsfem/mesh.hpp"
#include "lsfem/reference_basis.hpp"

namespace lsfem {

// Conforming nodal Lagrange space of degree k in {1,2,3} with 1 or 2
// components on a triangle mesh. Scalar lattice nodes are numbered vertices
// first, then k-1 nodes per global edge (ordered from the lower-index vertex),
// then element-interior nodes. Vector dofs interleave: dof = node*components + c.
class FunctionSpace {
 public:
  FunctionSpace(const Mesh& mesh, int degree, int components);

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  int components() const { return components_; }
  int n_nodes() const { return n_nodes_; }
  int n_dofs() const { return n_nodes_ * components_; }
  int nodes_per_elem() const { return npe_; }
  int n_edges() const { return n_edges_; }

  int dof(int node, int comp = 0) const { return node * components_ + comp; }
  const Vec2& node_coord(int node) const { return node_coords_[node]; }
  const std::vector<Vec2>& node_coords() const { return node_coords_; }

  std::span<const int> element_nodes(int elem) const {
    return {elem_nodes_.data() + static_cast<std::size_t>(elem) * npe_, static_cast<std::size_t>(npe_)};
  }

  // Global edge index for a vertex pair, or -1.
  int edge_index(int v0, int v1) const;

  // Scalar lattice nodes lying on the given edge (its two vertices plus the
  // k-1 edge nodes).
  std::vector<int> edge_nodes(int v0, int v1) const;

 private:
  const Mesh* mesh_;
  int degree_;
  int components_;
  int npe_;
  int n_nodes_ = 0;
  int n_edges_ = 0;
  std::vector<Vec2> node_coords_;
  std::vector<int> elem_nodes_;
  std::unordered_map<std::uint64_t, int> edge_lookup_;
};

FunctionSpace build_space(const Mesh& mesh, int degree, int components);

// Dofs of `component` on all boundary edges carrying `marker`; component = -1
// selects every component.
std::vector<int> boundary_dofs(const FunctionSpace& space, BoundaryMarker marker, int component = -1);

}  // namespace lsfem
