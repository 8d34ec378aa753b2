// SPDX-License-Identifier: Apache-2.0
#include "lsfem/mesh.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lsfem/errors.hpp"

using namespace lsfem;

TEST_CASE("benchmark box at h=0.5 has 16 triangles") {
  Mesh mesh = generate_rectangle_mesh(1.0, 2.0, 0.5);
  CHECK(mesh.n_triangles() == 16);
  CHECK(mesh.n_vertices() == 15);
  validate_mesh(mesh);
}

TEST_CASE("fine benchmark mesh respects the edge-length bound") {
  Mesh mesh = generate_rectangle_mesh(1.0, 2.0, 0.02);
  MeshStatistics s = mesh_statistics(mesh);
  CHECK(s.h_max <= doctest::Approx(0.03));
  CHECK(s.h_max <= 1.5 * 0.02);
  CHECK(s.total_area == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("tank-treading channel mesh keeps horizontal walls at y in {0, 2.12}") {
  Mesh mesh = generate_rectangle_mesh(10.0, 2.12, 0.1);
  validate_mesh(mesh);
  for (const auto& e : boundary_facets(mesh, BoundaryMarker::Bottom)) {
    CHECK(mesh.vertices[e.v0].y == 0.0);
    CHECK(mesh.vertices[e.v1].y == 0.0);
  }
  for (const auto& e : boundary_facets(mesh, BoundaryMarker::Top)) {
    CHECK(mesh.vertices[e.v0].y == 2.12);
    CHECK(mesh.vertices[e.v1].y == 2.12);
  }
}

TEST_CASE("boundary facet selection and lengths") {
  Mesh unit = generate_rectangle_mesh(1.0, 1.0, 0.5);
  auto left = boundary_facets(unit, BoundaryMarker::Left);
  CHECK(left.size() == 2);
  for (const auto& e : left) {
    CHECK(unit.vertices[e.v0].x == 0.0);
    CHECK(unit.vertices[e.v1].x == 0.0);
  }

  Mesh box = generate_rectangle_mesh(1.0, 2.0, 0.25);
  auto edge_len_sum = [&box](BoundaryMarker m) {
    double sum = 0.0;
    for (const auto& e : boundary_facets(box, m))
      sum += (box.vertices[e.v1] - box.vertices[e.v0]).norm();
    return sum;
  };
  CHECK(edge_len_sum(BoundaryMarker::Top) + edge_len_sum(BoundaryMarker::Bottom) ==
        doctest::Approx(2.0));
  CHECK(edge_len_sum(BoundaryMarker::Left) + edge_len_sum(BoundaryMarker::Right) ==
        doctest::Approx(4.0));
}

TEST_CASE("mesh statistics report exact areas") {
  CHECK(mesh_statistics(generate_rectangle_mesh(1.0, 2.0, 0.13)).total_area ==
        doctest::Approx(2.0).epsilon(1e-10));
  CHECK(mesh_statistics(generate_rectangle_mesh(14.0, 5.0, 0.25)).total_area ==
        doctest::Approx(70.0).epsilon(1e-10));
}

TEST_CASE("degenerate requests are rejected") {
  CHECK_THROWS_AS(generate_rectangle_mesh(-1.0, 2.0, 0.1), ValidationError);
  CHECK_THROWS_AS(generate_rectangle_mesh(1.0, 2.0, 0.0), ValidationError);
  CHECK_THROWS_AS(generate_rectangle_mesh(1.0, 2.0, 1.5), ValidationError);
}

TEST_CASE("Euler formula and edge manifoldness on several meshes") {
  for (double h : {0.5, 0.21, 0.073}) {
    Mesh mesh = generate_rectangle_mesh(1.3, 0.9, h);
    validate_mesh(mesh);
    std::set<std::pair<int, int>> edges;
    for (const auto& t : mesh.triangles)
      for (int k = 0; k < 3; ++k) {
        int a = t[k], b = t[(k + 1) % 3];
        if (a > b) std::swap(a, b);
        edges.insert({a, b});
      }
    const long euler = mesh.n_vertices() - static_cast<long>(edges.size()) + mesh.n_triangles();
    CHECK(euler == 1);
  }
}

TEST_CASE("positive areas on all generated meshes") {
  Mesh mesh = generate_rectangle_mesh(2.0, 1.0, 0.11);
  for (int t = 0; t < mesh.n_triangles(); ++t) CHECK(mesh.triangle_signed_area(t) > 0.0);
}

TEST_CASE("ascii round trip preserves the mesh") {
  Mesh mesh = generate_rectangle_mesh(1.0, 2.0, 0.4);
  std::stringstream ss;
  write_mesh_ascii(mesh, ss);
  Mesh back = read_mesh_ascii(ss);
  REQUIRE(back.n_vertices() == mesh.n_vertices());
  REQUIRE(back.n_triangles() == mesh.n_triangles());
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    CHECK(back.vertices[v].x == mesh.vertices[v].x);
    CHECK(back.vertices[v].y == mesh.vertices[v].y);
  }
  CHECK(back.boundary_edges.size() == mesh.boundary_edges.size());
}

TEST_CASE("point location works for interior and border points") {
  Mesh mesh = generate_rectangle_mesh(1.0, 2.0, 0.3);
  CHECK(mesh.locate({0.5, 0.5}) >= 0);
  CHECK(mesh.locate({0.0, 0.0}) >= 0);
  CHECK(mesh.locate({1.0, 2.0}) >= 0);
  CHECK(mesh.locate({1.5, 0.5}) == -1);
}
