// SPDX-License-Identifier: Apache-2.0
#include "lsfem/reference_basis.hpp"

#include <array>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace {
const Vec2 kGradL[3] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
constexpr int kEdgeVerts[3][2] = {{0, 1}, {1, 2}, {2, 0}};
}  // namespace

ReferenceBasis::ReferenceBasis(int k) : degree(k), size(nodes_per_element(k)) {
  if (k < 1 || k > 3) throw ValidationError("ReferenceBasis: degree must be 1, 2 or 3");
  const Vec2 verts[3] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  nodes.assign(verts, verts + 3);
  for (const auto& ev : kEdgeVerts) {
    for (int i = 1; i < k; ++i) {
      const double t = static_cast<double>(i) / k;
      nodes.push_back(verts[ev[0]] * (1.0 - t) + verts[ev[1]] * t);
    }
  }
  if (k == 3) nodes.push_back({1.0 / 3.0, 1.0 / 3.0});
}

void ReferenceBasis::values(const Vec2& p, double* out) const {
  const double l[3] = {1.0 - p.x - p.y, p.x, p.y};
  switch (degree) {
    case 1:
      out[0] = l[0];
      out[1] = l[1];
      out[2] = l[2];
      return;
    case 2:
      for (int i = 0; i < 3; ++i) out[i] = l[i] * (2.0 * l[i] - 1.0);
      for (int e = 0; e < 3; ++e) out[3 + e] = 4.0 * l[kEdgeVerts[e][0]] * l[kEdgeVerts[e][1]];
      return;
    case 3:
      for (int i = 0; i < 3; ++i)
        out[i] = 0.5 * l[i] * (3.0 * l[i] - 1.0) * (3.0 * l[i] - 2.0);
      for (int e = 0; e < 3; ++e) {
        const double la = l[kEdgeVerts[e][0]], lb = l[kEdgeVerts[e][1]];
        out[3 + 2 * e] = 4.5 * la * lb * (3.0 * la - 1.0);
        out[3 + 2 * e + 1] = 4.5 * la * lb * (3.0 * lb - 1.0);
      }
      out[9] = 27.0 * l[0] * l[1] * l[2];
      return;
  }
}

void ReferenceBasis::gradients(const Vec2& p, Vec2* out) const {
  const double l[3] = {1.0 - p.x - p.y, p.x, p.y};
  switch (degree) {
    case 1:
      for (int i = 0; i < 3; ++i) out[i] = kGradL[i];
      return;
    case 2:
      for (int i = 0; i < 3; ++i) out[i] = kGradL[i] * (4.0 * l[i] - 1.0);
      for (int e = 0; e < 3; ++e) {
        const int a = kEdgeVerts[e][0], b = kEdgeVerts[e][1];
        out[3 + e] = 4.0 * (kGradL[a] * l[b] + kGradL[b] * l[a]);
      }
      return;
    case 3:
      for (int i = 0; i < 3; ++i)
        out[i] = kGradL[i] * (0.5 * (27.0 * l[i] * l[i] - 18.0 * l[i] + 2.0));
      for (int e = 0; e < 3; ++e) {
        const int a = kEdgeVerts[e][0], b = kEdgeVerts[e][1];
        const double la = l[a], lb = l[b];
        out[3 + 2 * e] = 4.5 * (kGradL[a] * (lb * (6.0 * la - 1.0)) + kGradL[b] * (la * (3.0 * la - 1.0)));
        out[3 + 2 * e + 1] =
            4.5 * (kGradL[a] * (lb * (3.0 * lb - 1.0)) + kGradL[b] * (la * (6.0 * lb - 1.0)));
      }
      out[9] = 27.0 * (kGradL[0] * (l[1] * l[2]) + kGradL[1] * (l[0] * l[2]) + kGradL[2] * (l[0] * l[1]));
      return;
  }
}

const ReferenceBasis& reference_basis(int degree) {
  static const ReferenceBasis p1(1), p2(2), p3(3);
  switch (degree) {
    case 1: return p1;
    case 2: return p2;
    case 3: return p3;
  }
  throw ValidationError("reference_basis: degree must be 1, 2 or 3");
}

namespace {

// Lattice point (i,j) with i+j <= k mapped to the basis node index.
int lattice_to_node(int i, int j, int k) {
  if (i == 0 && j == 0) return 0;
  if (i == k && j == 0) return 1;
  if (i == 0 && j == k) return 2;
  if (j == 0) return 3 + (i - 1);                          // edge (0,1)
  if (i + j == k) return 3 + (k - 1) + (j - 1);            // edge (1,2)
  if (i == 0) return 3 + 2 * (k - 1) + ((k - j) - 1);      // edge (2,0)
  return 3 + 3 * (k - 1);                                  // interior (k = 3 only)
}

}  // namespace

std::vector<std::array<int, 3>> reference_subtriangles(int k) {
  std::vector<std::array<int, 3>> tris;
  tris.reserve(k * k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i + j < k; ++i) {
      tris.push_back({lattice_to_node(i, j, k), lattice_to_node(i + 1, j, k),
                      lattice_to_node(i, j + 1, k)});
      if (i + j < k - 1)
        tris.push_back({lattice_to_node(i + 1, j, k), lattice_to_node(i + 1, j + 1, k),
                        lattice_to_node(i, j + 1, k)});
    }
  }
  return tris;
}

}  // namespace lsfem
