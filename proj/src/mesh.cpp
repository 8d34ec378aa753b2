// SPDX-License-Identifier: Apache-2.0
#include "lsfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "lsfem/errors.hpp"

namespace lsfem {

const char* to_string(BoundaryMarker m) {
  switch (m) {
    case BoundaryMarker::Left: return "left";
    case BoundaryMarker::Right: return "right";
    case BoundaryMarker::Bottom: return "bottom";
    case BoundaryMarker::Top: return "top";
  }
  return "?";
}

BoundaryMarker boundary_marker_from_string(const std::string& s) {
  if (s == "left") return BoundaryMarker::Left;
  if (s == "right") return BoundaryMarker::Right;
  if (s == "bottom") return BoundaryMarker::Bottom;
  if (s == "top") return BoundaryMarker::Top;
  throw ValidationError("unknown boundary marker '" + s + "'");
}

namespace {

bool point_in_triangle(const Mesh& mesh, int t, const Vec2& p, double tol) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.vertices[tri[0]];
  const Vec2& b = mesh.vertices[tri[1]];
  const Vec2& c = mesh.vertices[tri[2]];
  const double area2 = cross2(a, b, c);
  return cross2(a, b, p) >= -tol * area2 && cross2(b, c, p) >= -tol * area2 &&
         cross2(c, a, p) >= -tol * area2;
}

}  // namespace

int Mesh::locate(const Vec2& p) const {
  const double tol = 1e-12;
  if (structured) {
    int i = static_cast<int>(std::floor((p.x - x0) / dx));
    int j = static_cast<int>(std::floor((p.y - y0) / dy));
    i = std::clamp(i, 0, nx - 1);
    j = std::clamp(j, 0, ny - 1);
    // Border points can fall in a neighboring cell after rounding.
    for (int dj = 0; dj <= 1; ++dj) {
      for (int di = 0; di <= 1; ++di) {
        const int ci = std::clamp(i - di, 0, nx - 1);
        const int cj = std::clamp(j - dj, 0, ny - 1);
        const int base = 2 * (cj * nx + ci);
        if (point_in_triangle(*this, base, p, tol)) return base;
        if (point_in_triangle(*this, base + 1, p, tol)) return base + 1;
      }
    }
  }
  for (int t = 0; t < n_triangles(); ++t) {
    if (point_in_triangle(*this, t, p, tol)) return t;
  }
  return -1;
}

Mesh generate_rectangle_mesh(double width, double height, double h) {
  if (!(width > 0.0) || !(height > 0.0) || !(h > 0.0))
    throw ValidationError("generate_rectangle_mesh: dimensions and h must be positive");
  if (!(h < std::min(width, height)))
    throw ValidationError("generate_rectangle_mesh: h must be smaller than both side lengths");

  Mesh mesh;
  mesh.target_h = h;
  mesh.structured = true;
  mesh.nx = static_cast<int>(std::ceil(width / h));
  mesh.ny = static_cast<int>(std::ceil(height / h));
  mesh.x0 = 0.0;
  mesh.y0 = 0.0;
  mesh.dx = width / mesh.nx;
  mesh.dy = height / mesh.ny;

  const int nvx = mesh.nx + 1, nvy = mesh.ny + 1;
  mesh.vertices.reserve(static_cast<std::size_t>(nvx) * nvy);
  for (int j = 0; j < nvy; ++j) {
    const double y = (j == mesh.ny) ? height : j * mesh.dy;
    for (int i = 0; i < nvx; ++i) {
      const double x = (i == mesh.nx) ? width : i * mesh.dx;
      mesh.vertices.push_back({x, y});
    }
  }
  auto vid = [&](int i, int j) { return j * nvx + i; };

  mesh.triangles.reserve(static_cast<std::size_t>(2) * mesh.nx * mesh.ny);
  for (int j = 0; j < mesh.ny; ++j) {
    for (int i = 0; i < mesh.nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      } else {
        mesh.triangles.push_back({v00, v10, v01});
        mesh.triangles.push_back({v10, v11, v01});
      }
    }
  }

  for (int i = 0; i < mesh.nx; ++i) {
    mesh.boundary_edges.push_back({vid(i, 0), vid(i + 1, 0), BoundaryMarker::Bottom});
    mesh.boundary_edges.push_back({vid(i, mesh.ny), vid(i + 1, mesh.ny), BoundaryMarker::Top});
  }
  for (int j = 0; j < mesh.ny; ++j) {
    mesh.boundary_edges.push_back({vid(0, j), vid(0, j + 1), BoundaryMarker::Left});
    mesh.boundary_edges.push_back({vid(mesh.nx, j), vid(mesh.nx, j + 1), BoundaryMarker::Right});
  }
  return mesh;
}

std::vector<BoundaryEdge> boundary_facets(const Mesh& mesh, BoundaryMarker marker) {
  std::vector<BoundaryEdge> out;
  for (const auto& e : mesh.boundary_edges)
    if (e.marker == marker) out.push_back(e);
  return out;
}

MeshStatistics mesh_statistics(const Mesh& mesh) {
  MeshStatistics s;
  s.n_vertices = mesh.n_vertices();
  s.n_triangles = mesh.n_triangles();
  s.h_min = std::numeric_limits<double>::max();
  s.h_max = 0.0;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const double len = (mesh.vertices[tri[k]] - mesh.vertices[tri[(k + 1) % 3]]).norm();
      s.h_min = std::min(s.h_min, len);
      s.h_max = std::max(s.h_max, len);
    }
    s.total_area += triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
  }
  return s;
}

void validate_mesh(const Mesh& mesh) {
  std::vector<char> used(mesh.vertices.size(), 0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int v : tri) {
      if (v < 0 || v >= mesh.n_vertices())
        throw ValidationError("mesh: triangle references vertex out of range");
      used[v] = 1;
    }
    if (mesh.triangle_signed_area(t) <= 0.0)
      throw ValidationError("mesh: triangle " + std::to_string(t) + " has non-positive area");
  }
  for (std::size_t v = 0; v < used.size(); ++v)
    if (!used[v]) throw ValidationError("mesh: orphan vertex " + std::to_string(v));

  // Every edge must belong to one triangle (boundary) or two (interior).
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  for (const auto& [e, c] : edge_count)
    if (c > 2) throw ValidationError("mesh: edge shared by more than two triangles");
  std::size_t n_boundary = 0;
  for (const auto& [e, c] : edge_count)
    if (c == 1) ++n_boundary;
  if (n_boundary != mesh.boundary_edges.size())
    throw ValidationError("mesh: boundary edge list inconsistent with triangulation");
  for (const auto& be : mesh.boundary_edges) {
    int a = be.v0, b = be.v1;
    if (a > b) std::swap(a, b);
    auto it = edge_count.find({a, b});
    if (it == edge_count.end() || it->second != 1)
      throw ValidationError("mesh: marked edge is not a boundary edge of the triangulation");
  }
}

Mesh read_mesh_ascii(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "lsfem-mesh" || version != 1)
    throw ValidationError("mesh import: expected 'lsfem-mesh 1' header");
  int nv = 0, nt = 0, nb = 0;
  double target_h = 0.0;
  in >> nv >> nt >> nb >> target_h;
  if (!in || nv <= 0 || nt <= 0 || nb <= 0)
    throw ValidationError("mesh import: bad counts");
  Mesh mesh;
  mesh.target_h = target_h;
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices) in >> v.x >> v.y;
  mesh.triangles.resize(nt);
  for (auto& t : mesh.triangles) in >> t[0] >> t[1] >> t[2];
  mesh.boundary_edges.resize(nb);
  for (auto& e : mesh.boundary_edges) {
    std::string marker;
    in >> e.v0 >> e.v1 >> marker;
    e.marker = boundary_marker_from_string(marker);
  }
  if (!in) throw ValidationError("mesh import: truncated file");
  validate_mesh(mesh);
  return mesh;
}

void write_mesh_ascii(const Mesh& mesh, std::ostream& out) {
  out << "lsfem-mesh 1\n";
  out << mesh.n_vertices() << ' ' << mesh.n_triangles() << ' ' << mesh.boundary_edges.size() << ' '
      << mesh.target_h << '\n';
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x << ' ' << v.y << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary_edges)
    out << e.v0 << ' ' << e.v1 << ' ' << to_string(e.marker) << '\n';
}

}  // namespace lsfem
