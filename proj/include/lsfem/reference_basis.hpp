// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "lsfem/geometry.hpp"

namespace lsfem {

// Nodal Lagrange basis of degree k in {1,2,3} on the reference triangle with
// vertices (0,0), (1,0), (0,1). Node order: vertices, then local edges
// (0,1), (1,2), (2,0) with k-1 equispaced nodes each (ordered away from the
// first vertex of the edge), then the interior node for k = 3.
struct ReferenceBasis {
  int degree;
  int size;                       // (k+1)(k+2)/2
  std::vector<Vec2> nodes;        // reference coordinates per basis function

  explicit ReferenceBasis(int degree);

  void values(const Vec2& p, double* out) const;     // out[size]
  void gradients(const Vec2& p, Vec2* out) const;    // out[size]
};

const ReferenceBasis& reference_basis(int degree);

inline int nodes_per_element(int degree) { return (degree + 1) * (degree + 2) / 2; }

// Uniform sub-triangulation of the reference element into degree^2 triangles
// whose corners are the Lagrange nodes; indices refer to the node order above.
std::vector<std::array<int, 3>> reference_subtriangles(int degree);

}  // namespace lsfem
