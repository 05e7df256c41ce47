#pragma once

#include <algorithm>

#include "types.hpp"

namespace sphfn {

/// Element (x, k) of G = R^n · K, acting on E^n by y ↦ k y + x.
struct MotionElement {
  Vector translation;
  Matrix rotation;

  static MotionElement identity(int n) { return {Vector::Zero(n), Matrix::Identity(n, n)}; }
  static MotionElement translate(Vector x) {
    const auto n = x.size();
    return {std::move(x), Matrix::Identity(n, n)};
  }

  int dim() const { return static_cast<int>(translation.size()); }
  Vector apply(const Vector& y) const { return rotation * y + translation; }
};

/// (x₁, k₁)(x₂, k₂) = (x₁ + k₁x₂, k₁k₂)
inline MotionElement motion_compose(const MotionElement& g1, const MotionElement& g2) {
  require_same_dim(g1.translation.size(), g2.translation.size(), "motion_compose");
  return {g1.translation + g1.rotation * g2.translation, g1.rotation * g2.rotation};
}

/// (x, k)⁻¹ = (−k⁻¹x, k⁻¹); k⁻¹ = kᵀ since k is orthogonal.
inline MotionElement motion_inverse(const MotionElement& g) {
  Matrix kinv = g.rotation.transpose();
  Vector x = -(kinv * g.translation);
  return {std::move(x), std::move(kinv)};
}

inline double motion_distance(const MotionElement& a, const MotionElement& b) {
  return std::max((a.translation - b.translation).cwiseAbs().maxCoeff(),
                  (a.rotation - b.rotation).cwiseAbs().maxCoeff());
}

}  // namespace sphfn
