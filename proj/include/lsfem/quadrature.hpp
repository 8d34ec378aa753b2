// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "lsfem/geometry.hpp"

namespace lsfem {

// Gauss-Legendre nodes/weights on [0,1], exact for polynomials of degree 2n-1.
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Quadrature on the reference triangle {x,y >= 0, x+y <= 1}; weights sum to 1/2.
struct TriangleQuadrature {
  std::vector<Vec2> points;
  std::vector<double> weights;
  int degree = 0;

  int size() const { return static_cast<int>(points.size()); }
};

// Rule exact for total polynomial degree `degree`, built as a collapsed
// tensor-product (Duffy) Gauss rule. Cached internally; cheap to call.
const TriangleQuadrature& triangle_quadrature(int degree);

}  // namespace lsfem
