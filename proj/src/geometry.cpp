// SPDX-License-Identifier: Apache-2.0
#include "lsfem/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace lsfem {

// Closest-point distance via Newton on the standard parameterization
// x = a^2 px/(t+a^2), y = b^2 py/(t+b^2); f(t) is convex and decreasing on
// (-b^2, inf), so Newton started left of the root converges monotonically.
double signed_distance_to_ellipse(const Vec2& p, double a, double b) {
  if (b > a) return signed_distance_to_ellipse({p.y, p.x}, b, a);

  const double px = std::abs(p.x);
  const double py = std::abs(p.y);
  const double inside = (px / a) * (px / a) + (py / b) * (py / b) - 1.0;
  const double sign = inside < 0.0 ? -1.0 : 1.0;

  if (a == b) return std::hypot(px, py) - a;

  if (py == 0.0) {
    const double cusp = (a * a - b * b) / a;
    if (px < cusp) {
      const double xs = a * a * px / (a * a - b * b);
      const double ys = b * std::sqrt(std::max(0.0, 1.0 - (xs / a) * (xs / a)));
      return -std::hypot(px - xs, ys);  // interior of the evolute: point inside
    }
    return sign * std::abs(px - a);
  }
  if (px == 0.0) return sign * std::abs(py - b);

  double t = std::max(a * px - a * a, b * py - b * b);
  for (int it = 0; it < 100; ++it) {
    const double ra = a * px / (t + a * a);
    const double rb = b * py / (t + b * b);
    const double f = ra * ra + rb * rb - 1.0;
    if (std::abs(f) < 1e-15) break;
    const double df = -2.0 * (ra * ra / (t + a * a) + rb * rb / (t + b * b));
    const double step = f / df;
    t -= step;
    if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(t))) break;
  }
  const double xs = a * a * px / (t + a * a);
  const double ys = b * b * py / (t + b * b);
  return sign * std::hypot(px - xs, py - ys);
}

}  // namespace lsfem
