// SPDX-License-Identifier: Apache-2.0
#include "lsfem/fmm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "lsfem/errors.hpp"

namespace lsfem {

NodalLattice build_nodal_lattice(const FunctionSpace& space) {
  NodalLattice lat;
  lat.space = &space;
  const int k = space.degree();
  const auto ref_tris = reference_subtriangles(k);
  lat.triangles.reserve(static_cast<std::size_t>(space.mesh().n_triangles()) * ref_tris.size());
  for (int e = 0; e < space.mesh().n_triangles(); ++e) {
    const auto nodes = space.element_nodes(e);
    for (const auto& rt : ref_tris)
      lat.triangles.push_back({nodes[rt[0]], nodes[rt[1]], nodes[rt[2]]});
  }

  lat.node_tri_offsets.assign(space.n_nodes() + 1, 0);
  for (const auto& t : lat.triangles)
    for (int v : t) ++lat.node_tri_offsets[v + 1];
  for (int n = 0; n < space.n_nodes(); ++n) lat.node_tri_offsets[n + 1] += lat.node_tri_offsets[n];
  lat.node_tris.resize(lat.triangles.size() * 3);
  std::vector<int> cursor(lat.node_tri_offsets.begin(), lat.node_tri_offsets.end() - 1);
  for (std::size_t t = 0; t < lat.triangles.size(); ++t)
    for (int v : lat.triangles[t]) lat.node_tris[cursor[v]++] = static_cast<int>(t);
  return lat;
}

std::vector<std::pair<Vec2, Vec2>> reconstruct_contour(const NodalLattice& lattice,
                                                       const DiscreteField& phi) {
  const FunctionSpace& s = *lattice.space;
  std::vector<std::pair<Vec2, Vec2>> segments;
  for (const auto& tri : lattice.triangles) {
    const double v[3] = {phi.coeffs[s.dof(tri[0], 0)], phi.coeffs[s.dof(tri[1], 0)],
                         phi.coeffs[s.dof(tri[2], 0)]};
    bool pos = false, neg = false;
    for (double val : v) {
      pos = pos || val > 0.0;
      neg = neg || val < 0.0;
    }
    if (!(pos && neg)) continue;
    Vec2 pts[3];
    int count = 0;
    for (int a = 0; a < 3 && count < 3; ++a) {
      const int b = (a + 1) % 3;
      if ((v[a] > 0.0 && v[b] < 0.0) || (v[a] < 0.0 && v[b] > 0.0)) {
        const double t = v[a] / (v[a] - v[b]);
        pts[count++] = s.node_coord(tri[a]) * (1.0 - t) + s.node_coord(tri[b]) * t;
      } else if (v[a] == 0.0) {
        pts[count++] = s.node_coord(tri[a]);
      }
    }
    if (count >= 2) segments.emplace_back(pts[0], pts[1]);
  }
  return segments;
}

namespace {

// Eikonal update of the unknown corner C from known values dA <= dB at A, B.
// Solves |grad of the linear interpolant| = 1; falls back to edge updates when
// the characteristic leaves the triangle.
double triangle_update(const Vec2& pa, const Vec2& pb, const Vec2& pc, double da, double db) {
  const Vec2 e1 = pa - pc;
  const Vec2 e2 = pb - pc;
  const double g11 = e1.dot(e1), g12 = e1.dot(e2), g22 = e2.dot(e2);
  const double det = g11 * g22 - g12 * g12;
  const double edge = std::min(da + e1.norm(), db + e2.norm());
  if (det <= 0.0) return edge;
  // Q = (G G^T)^{-1} for G rows e1, e2.
  const double q11 = g22 / det, q12 = -g12 / det, q22 = g11 / det;
  const double eQe = q11 + 2.0 * q12 + q22;
  const double eQd = (q11 + q12) * da + (q12 + q22) * db;
  const double dQd = q11 * da * da + 2.0 * q12 * da * db + q22 * db * db;
  const double disc = eQd * eQd - eQe * (dQd - 1.0);
  if (disc < 0.0) return edge;
  const double t = (eQd + std::sqrt(disc)) / eQe;
  if (t < std::max(da, db)) return edge;
  // Upwinding: the solution must depend monotonically on both inputs.
  const double w1 = q11 * (t - da) + q12 * (t - db);
  const double w2 = q12 * (t - da) + q22 * (t - db);
  if (w1 < 0.0 || w2 < 0.0) return edge;
  return t;
}

}  // namespace

LevelSet reinitialize_fmm(const LevelSet& ls) {
  const FunctionSpace& s = *ls.phi.space;
  const NodalLattice lattice = build_nodal_lattice(s);
  const auto segments = reconstruct_contour(lattice, ls.phi);
  if (segments.empty())
    throw InvalidStateError("reinitialize_fmm: no sign change found, no interface to keep");

  const int n = s.n_nodes();
  constexpr double kFar = std::numeric_limits<double>::max();
  std::vector<double> dist(n, kFar);
  enum : char { Far = 0, Trial = 1, Accepted = 2 };
  std::vector<char> status(n, Far);

  // Seeds: all nodes of band elements get the exact distance to the contour.
  std::vector<char> seed(n, 0);
  for (int e = 0; e < s.mesh().n_triangles(); ++e) {
    double m = kFar;
    for (int node : s.element_nodes(e)) m = std::min(m, std::abs(ls.phi.coeffs[s.dof(node, 0)]));
    if (m < 2.0 * ls.eps)
      for (int node : s.element_nodes(e)) seed[node] = 1;
  }
  // Sign-change sub-triangles always seed, whatever the eps band says.
  for (const auto& tri : lattice.triangles) {
    const double v0 = ls.phi.coeffs[s.dof(tri[0], 0)];
    const double v1 = ls.phi.coeffs[s.dof(tri[1], 0)];
    const double v2 = ls.phi.coeffs[s.dof(tri[2], 0)];
    const double lo = std::min({v0, v1, v2}), hi = std::max({v0, v1, v2});
    if (lo <= 0.0 && hi >= 0.0)
      for (int v : tri) seed[v] = 1;
  }

  using HeapItem = std::pair<double, int>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>> heap;
  for (int node = 0; node < n; ++node) {
    if (!seed[node]) continue;
    const Vec2 p = s.node_coord(node);
    double d = kFar;
    for (const auto& seg : segments) d = std::min(d, point_segment_distance(p, seg.first, seg.second));
    dist[node] = d;
    status[node] = Trial;
    heap.emplace(d, node);
  }

  auto relax = [&](int c) {
    if (seed[c]) return;  // seeded values are exact, marching never improves them
    const Vec2 pc = s.node_coord(c);
    double best = dist[c];
    for (int it = lattice.node_tri_offsets[c]; it < lattice.node_tri_offsets[c + 1]; ++it) {
      const auto& tri = lattice.triangles[lattice.node_tris[it]];
      int a = -1, b = -1;
      for (int v : tri) {
        if (v == c) continue;
        (a < 0 ? a : b) = v;
      }
      const bool ka = status[a] == Accepted, kb = status[b] == Accepted;
      if (ka && kb) {
        double da = dist[a], db = dist[b];
        const Vec2 pa = s.node_coord(a), pb = s.node_coord(b);
        best = std::min(best, da <= db ? triangle_update(pa, pb, pc, da, db)
                                       : triangle_update(pb, pa, pc, db, da));
      } else if (ka) {
        best = std::min(best, dist[a] + (pc - s.node_coord(a)).norm());
      } else if (kb) {
        best = std::min(best, dist[b] + (pc - s.node_coord(b)).norm());
      }
    }
    if (best < dist[c]) {
      dist[c] = best;
      status[c] = Trial;
      heap.emplace(best, c);
    }
  };

  while (!heap.empty()) {
    const auto [d, node] = heap.top();
    heap.pop();
    if (status[node] == Accepted || d > dist[node]) continue;
    status[node] = Accepted;
    for (int it = lattice.node_tri_offsets[node]; it < lattice.node_tri_offsets[node + 1]; ++it)
      for (int v : lattice.triangles[lattice.node_tris[it]])
        if (status[v] != Accepted) relax(v);
  }

  LevelSet out;
  out.eps = ls.eps;
  out.policy = ls.policy;
  out.phi = DiscreteField(s);
  for (int node = 0; node < n; ++node) {
    const double old = ls.phi.coeffs[s.dof(node, 0)];
    const double sgn = old > 0.0 ? 1.0 : (old < 0.0 ? -1.0 : 0.0);
    out.phi.coeffs[s.dof(node, 0)] = sgn * dist[node];
  }
  return out;
}

}  // namespace lsfem
