// SPDX-License-Identifier: Apache-2.0
// Reference computations for tests, independent of the library's numerics.
#pragma once

#include <algorithm>
#include <cmath>

#include "lsfem/geometry.hpp"

namespace oracles {

// Ellipse perimeter by composite Simpson quadrature of the arclength integrand.
inline double ellipse_perimeter(double a, double b) {
  const int n = 20000;  // even
  const double h = 2.0 * M_PI / n;
  auto f = [&](double t) {
    const double s = std::sin(t), c = std::cos(t);
    return std::sqrt(a * a * s * s + b * b * c * c);
  };
  double sum = f(0.0) + f(2.0 * M_PI);
  for (int i = 1; i < n; ++i) sum += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// Unsigned distance from p to the ellipse boundary by parametric sampling plus
// golden-section refinement.
inline double ellipse_distance_brute(const lsfem::Vec2& p, double a, double b) {
  auto d2 = [&](double t) {
    const double dx = a * std::cos(t) - p.x;
    const double dy = b * std::sin(t) - p.y;
    return dx * dx + dy * dy;
  };
  const int n = 20001;
  double best_t = 0.0, best = d2(0.0);
  for (int i = 1; i < n; ++i) {
    const double t = 2.0 * M_PI * i / n;
    const double v = d2(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  double lo = best_t - 2.0 * M_PI / n, hi = best_t + 2.0 * M_PI / n;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = hi - gr * (hi - lo);
    const double d = lo + gr * (hi - lo);
    if (d2(c) < d2(d))
      hi = d;
    else
      lo = c;
  }
  return std::sqrt(d2(0.5 * (lo + hi)));
}

inline double ellipse_signed_distance_brute(const lsfem::Vec2& p, double a, double b) {
  const double inside = (p.x / a) * (p.x / a) + (p.y / b) * (p.y / b) - 1.0;
  return (inside < 0.0 ? -1.0 : 1.0) * ellipse_distance_brute(p, a, b);
}

}  // namespace oracles
