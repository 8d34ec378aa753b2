// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace lsfem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Row-major 2x2 matrix, enough for Jacobians and moment tensors.
struct Mat2 {
  double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

  double det() const { return a00 * a11 - a01 * a10; }
  double trace() const { return a00 + a11; }
  Mat2 transpose() const { return {a00, a10, a01, a11}; }
  Vec2 apply(const Vec2& v) const { return {a00 * v.x + a01 * v.y, a10 * v.x + a11 * v.y}; }
  Mat2 inverse() const {
    const double d = det();
    return {a11 / d, -a01 / d, -a10 / d, a00 / d};
  }
  Mat2 operator+(const Mat2& o) const { return {a00 + o.a00, a01 + o.a01, a10 + o.a10, a11 + o.a11}; }
  Mat2 operator*(double s) const { return {a00 * s, a01 * s, a10 * s, a11 * s}; }
};

// Twice the signed area of triangle (a, b, c); positive for counterclockwise order.
inline double cross2(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross2(a, b, c);
}

// Euclidean distance from p to segment [a, b].
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squared_norm();
  if (len2 == 0.0) return (p - a).norm();
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

// Signed distance from p to the axis-aligned ellipse x^2/a^2 + y^2/b^2 = 1
// centered at the origin; negative inside. Newton iteration on the distance
// parameterization, robust for a >= b > 0.
double signed_distance_to_ellipse(const Vec2& p, double a, double b);

}  // namespace lsfem
