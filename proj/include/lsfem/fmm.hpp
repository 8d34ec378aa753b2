// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lsfem/levelset.hpp"

namespace lsfem {

// Degree-1 sub-lattice of a scalar Lagrange space: every node of the space is
// a lattice vertex, every element contributes degree^2 sub-triangles.
struct NodalLattice {
  const FunctionSpace* space = nullptr;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> node_tri_offsets;  // CSR adjacency node -> incident triangles
  std::vector<int> node_tris;
};

NodalLattice build_nodal_lattice(const FunctionSpace& space);

// Segments of the piecewise-linear zero contour reconstructed on the lattice.
std::vector<std::pair<Vec2, Vec2>> reconstruct_contour(const NodalLattice& lattice,
                                                       const DiscreteField& phi);

// Resets phi to a signed-distance approximation without moving the interface:
// nodes of band elements get the exact distance to the reconstructed contour,
// the far field is rebuilt by causality-ordered fast marching with the local
// triangle eikonal update. Signs are taken from the input nodal values.
LevelSet reinitialize_fmm(const LevelSet& ls);

}  // namespace lsfem
