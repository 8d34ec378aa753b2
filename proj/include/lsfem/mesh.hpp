// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "lsfem/geometry.hpp"

namespace lsfem {

enum class BoundaryMarker : std::uint8_t { Left, Right, Bottom, Top };

const char* to_string(BoundaryMarker m);
BoundaryMarker boundary_marker_from_string(const std::string& s);

struct BoundaryEdge {
  int v0 = -1;
  int v1 = -1;
  BoundaryMarker marker = BoundaryMarker::Left;
};

// Conforming triangulation of an axis-aligned rectangle. Immutable after
// construction; triangles are counterclockwise.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  double target_h = 0.0;

  // Set by the structured generator; enables O(1) point location.
  bool structured = false;
  int nx = 0, ny = 0;
  double x0 = 0.0, y0 = 0.0, dx = 0.0, dy = 0.0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_signed_area(int t) const {
    const auto& tri = triangles[t];
    return triangle_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
  }

  // Index of the triangle containing p (within a small tolerance), or -1.
  int locate(const Vec2& p) const;
};

struct MeshStatistics {
  int n_vertices = 0;
  int n_triangles = 0;
  double h_min = 0.0;
  double h_max = 0.0;
  double total_area = 0.0;
};

// Structured mesh of (0,width) x (0,height): uniform grid of ceil(width/h) x
// ceil(height/h) cells, each split into two right triangles with the diagonal
// alternating per cell to avoid directional bias.
Mesh generate_rectangle_mesh(double width, double height, double h);

std::vector<BoundaryEdge> boundary_facets(const Mesh& mesh, BoundaryMarker marker);

MeshStatistics mesh_statistics(const Mesh& mesh);

// Plain ASCII exchange format for cross-checking against external generators:
//   lsfem-mesh 1
//   <n_vertices> <n_triangles> <n_boundary_edges> <target_h>
//   x y                 (per vertex)
//   a b c               (per triangle)
//   a b <marker-name>   (per boundary edge)
Mesh read_mesh_ascii(std::istream& in);
void write_mesh_ascii(const Mesh& mesh, std::ostream& out);

// Checks the Mesh invariants (positive areas, edge-manifoldness, vertex use);
// throws ValidationError on the first violation.
void validate_mesh(const Mesh& mesh);

}  // namespace lsfem
