// SPDX-License-Identifier: Apache-2.0
#include "lsfem/fmm.hpp"

#include <cmath>
#include <queue>

#include "doctest.h"
#include "lsfem/errors.hpp"

using namespace lsfem;

namespace {

LevelSet circle_distance(const FunctionSpace& space, double h, Vec2 c = {0.5, 0.5},
                         double r = 0.25) {
  return init_signed_distance(space, CircleShape{c, r}, 1.5 * h);
}

// Graph shortest path from seeded nodes; an upper bound for the marched field.
std::vector<double> dijkstra_bound(const NodalLattice& lat, const std::vector<double>& seeds) {
  const FunctionSpace& s = *lat.space;
  std::vector<double> dist(seeds);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  for (int n = 0; n < s.n_nodes(); ++n)
    if (dist[n] < 1e300) heap.emplace(dist[n], n);
  while (!heap.empty()) {
    auto [d, n] = heap.top();
    heap.pop();
    if (d > dist[n]) continue;
    for (int it = lat.node_tri_offsets[n]; it < lat.node_tri_offsets[n + 1]; ++it)
      for (int v : lat.triangles[lat.node_tris[it]]) {
        if (v == n) continue;
        const double nd = d + (s.node_coord(v) - s.node_coord(n)).norm();
        if (nd < dist[v]) {
          dist[v] = nd;
          heap.emplace(nd, v);
        }
      }
  }
  return dist;
}

}  // namespace

TEST_CASE("nodal lattice has degree^2 sub-triangles per element") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.25);
  for (int k : {1, 2, 3}) {
    FunctionSpace space(mesh, k, 1);
    NodalLattice lat = build_nodal_lattice(space);
    CHECK(static_cast<int>(lat.triangles.size()) == mesh.n_triangles() * k * k);
    // Sub-triangle areas tile each element.
    double area = 0.0;
    for (const auto& t : lat.triangles)
      area += triangle_area(space.node_coord(t[0]), space.node_coord(t[1]), space.node_coord(t[2]));
    CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("reinitialize_fmm recovers the distance from a scaled input") {
  const double h = 0.04;
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, h);
  FunctionSpace p1(mesh, 1, 1);
  LevelSet ls = circle_distance(p1, h);
  LevelSet scaled = ls;
  scaled.phi.coeffs *= 3.0;

  LevelSet out = reinitialize_fmm(scaled);
  double max_err = 0.0;
  for (int n = 0; n < p1.n_nodes(); ++n) {
    const double exact = (p1.node_coord(n) - Vec2{0.5, 0.5}).norm() - 0.25;
    max_err = std::max(max_err, std::abs(out.phi.coeffs[n] - exact));
  }
  CHECK(max_err < 0.5 * h);

  LevelSetOps ops(p1);
  CHECK(ops.band_gradient_deviation_median(out) < 0.05);

  // The zero contour did not move: sample the input contour.
  NodalLattice lat = build_nodal_lattice(p1);
  for (const auto& seg : reconstruct_contour(lat, scaled.phi)) {
    const Vec2 mid = (seg.first + seg.second) * 0.5;
    CHECK(std::abs(out.phi.value(mid)) < 0.1 * h);
  }
}

TEST_CASE("reinitialize_fmm is idempotent on the band") {
  const double h = 0.05;
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, h);
  FunctionSpace p1(mesh, 1, 1);
  LevelSet ls = circle_distance(p1, h);
  LevelSet out = reinitialize_fmm(ls);
  LevelSetOps ops(p1);
  for (int e : ops.band_elements(ls))
    for (int node : p1.element_nodes(e))
      CHECK(std::abs(out.phi.coeffs[node] - ls.phi.coeffs[node]) < 0.1 * h);
}

TEST_CASE("distorted far field is rebuilt between the Euclidean and graph bounds") {
  const double h = 0.05;
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, h);
  FunctionSpace p1(mesh, 1, 1);
  LevelSet clean = circle_distance(p1, h);
  LevelSet distorted = clean;
  for (int n = 0; n < p1.n_nodes(); ++n) {
    const double d = clean.phi.coeffs[n];
    const double excess = std::max(0.0, std::abs(d) - 3.0 * h);
    distorted.phi.coeffs[n] = d + (d > 0.0 ? 1.0 : -1.0) * 3.0 * excess * excess;
  }

  LevelSet out = reinitialize_fmm(distorted);

  // Band nodes keep their clean values.
  LevelSetOps ops(p1);
  for (int e : ops.band_elements(distorted))
    for (int node : p1.element_nodes(e))
      CHECK(std::abs(out.phi.coeffs[node] - clean.phi.coeffs[node]) < 0.1 * h);

  // Far field: below the graph distance, above the straight-line distance.
  NodalLattice lat = build_nodal_lattice(p1);
  const auto segments = reconstruct_contour(lat, distorted.phi);
  std::vector<double> seeds(p1.n_nodes(), 1e300);
  for (int e = 0; e < mesh.n_triangles(); ++e) {
    double m = 1e300;
    for (int node : p1.element_nodes(e)) m = std::min(m, std::abs(distorted.phi.coeffs[node]));
    if (m < 2.0 * distorted.eps)
      for (int node : p1.element_nodes(e)) {
        double d = 1e300;
        for (const auto& seg : segments)
          d = std::min(d, point_segment_distance(p1.node_coord(node), seg.first, seg.second));
        seeds[node] = d;
      }
  }
  const auto upper = dijkstra_bound(lat, seeds);
  for (int n = 0; n < p1.n_nodes(); ++n) {
    double lower = 1e300;
    for (const auto& seg : segments)
      lower = std::min(lower, point_segment_distance(p1.node_coord(n), seg.first, seg.second));
    const double v = std::abs(out.phi.coeffs[n]);
    CHECK(v <= upper[n] + 1e-9);
    CHECK(v >= lower - 0.5 * h);
  }
}

TEST_CASE("signs never flip at band nodes") {
  const double h = 0.05;
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, h);
  FunctionSpace p2(mesh, 2, 1);
  LevelSet ls = circle_distance(p2, h);
  LevelSet scaled = ls;
  scaled.phi.coeffs *= 2.5;
  LevelSet out = reinitialize_fmm(scaled);
  for (int n = 0; n < p2.n_nodes(); ++n) {
    const double a = scaled.phi.coeffs[n], b = out.phi.coeffs[n];
    CHECK(a * b >= 0.0);
  }
}

TEST_CASE("fmm works on the degree-2 sub-lattice") {
  const double h = 0.06;
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, h);
  FunctionSpace p2(mesh, 2, 1);
  LevelSet ls = circle_distance(p2, h);
  LevelSet scaled = ls;
  scaled.phi.coeffs *= 3.0;
  LevelSet out = reinitialize_fmm(scaled);
  double max_err = 0.0;
  for (int n = 0; n < p2.n_nodes(); ++n) {
    const double exact = (p2.node_coord(n) - Vec2{0.5, 0.5}).norm() - 0.25;
    max_err = std::max(max_err, std::abs(out.phi.coeffs[n] - exact));
  }
  CHECK(max_err < 0.5 * h);
}

TEST_CASE("no sign change raises invalid-state") {
  Mesh mesh = generate_rectangle_mesh(1.0, 1.0, 0.2);
  FunctionSpace p1(mesh, 1, 1);
  LevelSet ls;
  ls.eps = 0.3;
  ls.phi = interpolate(p1, std::function<double(Vec2)>([](Vec2) { return 1.0; }));
  CHECK_THROWS_AS(reinitialize_fmm(ls), InvalidStateError);
}
