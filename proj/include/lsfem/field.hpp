// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>

#include "lsfem/space.hpp"

namespace lsfem {

// Coefficients of a function in a FunctionSpace.
struct DiscreteField {
  const FunctionSpace* space = nullptr;
  Eigen::VectorXd coeffs;

  DiscreteField() = default;
  explicit DiscreteField(const FunctionSpace& s)
      : space(&s), coeffs(Eigen::VectorXd::Zero(s.n_dofs())) {}

  // Point evaluation; locates the containing element (throws ValidationError
  // if p is outside the mesh).
  double value(const Vec2& p, int comp = 0) const;
  Vec2 value2(const Vec2& p) const;
  Vec2 gradient(const Vec2& p, int comp = 0) const;

  // Evaluation with a known element and reference coordinates.
  double value_on(int elem, const Vec2& ref, int comp = 0) const;
  Vec2 gradient_on(int elem, const Vec2& ref, int comp = 0) const;
};

DiscreteField interpolate(const FunctionSpace& space, const std::function<double(Vec2)>& f);
DiscreteField interpolate(const FunctionSpace& space, const std::function<Vec2(Vec2)>& f);

// Reference coordinates of p inside element `elem`.
Vec2 to_reference(const Mesh& mesh, int elem, const Vec2& p);

}  // namespace lsfem
