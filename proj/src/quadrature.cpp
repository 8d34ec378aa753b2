// SPDX-License-Identifier: Apache-2.0
#include "lsfem/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "lsfem/errors.hpp"

namespace lsfem {

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw ValidationError("gauss_legendre_01: n >= 1 required");
  nodes.resize(n);
  weights.resize(n);
  // Newton on P_n(x) over [-1,1] with Chebyshev-like initial guesses.
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[n - 1 - i] = 0.5 * (1.0 + x);
    weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

const TriangleQuadrature& triangle_quadrature(int degree) {
  static std::map<int, TriangleQuadrature> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(degree);
  if (it != cache.end()) return it->second;

  // Duffy map (xi, eta) -> (xi, eta (1 - xi)) with Jacobian (1 - xi); the
  // integrand gains one degree in xi.
  const int n = (degree + 2 + 1) / 2;
  std::vector<double> gx, gw;
  gauss_legendre_01(n, gx, gw);

  TriangleQuadrature rule;
  rule.degree = degree;
  rule.points.reserve(n * n);
  rule.weights.reserve(n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double xi = gx[i], eta = gx[j];
      rule.points.push_back({xi, eta * (1.0 - xi)});
      rule.weights.push_back(gw[i] * gw[j] * (1.0 - xi));
    }
  }
  return cache.emplace(degree, std::move(rule)).first->second;
}

}  // namespace lsfem
