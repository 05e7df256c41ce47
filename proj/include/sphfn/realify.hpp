#pragma once

// Embeddings of U(m) into O(2m) and Sp(m) into O(4m).
//
// Complex coordinates are interleaved: z_j = x_j + i y_j occupies real slots
// (2j, 2j+1). Quaternionic coordinates q_j = a + b i + c j + d k occupy slots
// (4j .. 4j+3). H^m is a right H-module; Sp(m) acts on the left and the
// scalar factors U(1), Sp(1) act on the right.

#include <cmath>
#include <vector>

#include "types.hpp"

namespace sphfn {

struct Quaternion {
  double a = 0, b = 0, c = 0, d = 0;

  friend Quaternion operator*(const Quaternion& p, const Quaternion& q) {
    return {p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
            p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
            p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
            p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a};
  }
  friend Quaternion operator+(const Quaternion& p, const Quaternion& q) {
    return {p.a + q.a, p.b + q.b, p.c + q.c, p.d + q.d};
  }
  friend Quaternion operator-(const Quaternion& p, const Quaternion& q) {
    return {p.a - q.a, p.b - q.b, p.c - q.c, p.d - q.d};
  }
  Quaternion operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
  Quaternion conj() const { return {a, -b, -c, -d}; }
  double norm2() const { return a * a + b * b + c * c + d * d; }
};

/// Row-major m×m quaternionic matrix.
struct QuaternionMatrix {
  int m = 0;
  std::vector<Quaternion> entries;

  explicit QuaternionMatrix(int size = 0) : m(size), entries(static_cast<size_t>(size) * size) {}
  Quaternion& operator()(int i, int j) { return entries[static_cast<size_t>(i) * m + j]; }
  const Quaternion& operator()(int i, int j) const { return entries[static_cast<size_t>(i) * m + j]; }
};

/// 4×4 real matrix of v ↦ q·v.
inline Eigen::Matrix4d left_mult(const Quaternion& q) {
  Eigen::Matrix4d L;
  L << q.a, -q.b, -q.c, -q.d,
       q.b,  q.a, -q.d,  q.c,
       q.c,  q.d,  q.a, -q.b,
       q.d, -q.c,  q.b,  q.a;
  return L;
}

/// 4×4 real matrix of v ↦ v·q.
inline Eigen::Matrix4d right_mult(const Quaternion& q) {
  Eigen::Matrix4d R;
  R << q.a, -q.b, -q.c, -q.d,
       q.b,  q.a,  q.d, -q.c,
       q.c, -q.d,  q.a,  q.b,
       q.d,  q.c, -q.b,  q.a;
  return R;
}

inline double unitarity_defect(const CMatrix& u) {
  return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

/// z = x + iy becomes the block [[x, -y], [y, x]].
/// Throws NonUnitaryInput unless U^H U = I within `tol`.
inline Matrix realify(const CMatrix& u, double tol = 1e-12) {
  if (u.rows() != u.cols()) {
    throw Error(ErrorKind::NonUnitaryInput, "matrix is not square");
  }
  if (unitarity_defect(u) > tol) {
    throw Error(ErrorKind::NonUnitaryInput, "U^H U differs from I by more than tolerance");
  }
  const Eigen::Index m = u.rows();
  Matrix r(2 * m, 2 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double x = u(i, j).real();
      const double y = u(i, j).imag();
      r(2 * i, 2 * j) = x;
      r(2 * i, 2 * j + 1) = -y;
      r(2 * i + 1, 2 * j) = y;
      r(2 * i + 1, 2 * j + 1) = x;
    }
  }
  return r;
}

/// Real 4m×4m matrix of v ↦ A v on H^m (no unitarity check).
inline Matrix realify_quaternionic(const QuaternionMatrix& a) {
  Matrix r(4 * a.m, 4 * a.m);
  for (int i = 0; i < a.m; ++i) {
    for (int j = 0; j < a.m; ++j) {
      r.block<4, 4>(4 * i, 4 * j) = left_mult(a(i, j));
    }
  }
  return r;
}

/// Real matrix of the scalar action v ↦ v·q̄ on H^m. q ↦ this map is a
/// homomorphism Sp(1) → O(4m).
inline Matrix realify_right_scalar(const Quaternion& q, int m) {
  Matrix r = Matrix::Zero(4 * m, 4 * m);
  const Eigen::Matrix4d block = right_mult(q.conj());
  for (int i = 0; i < m; ++i) r.block<4, 4>(4 * i, 4 * i) = block;
  return r;
}

}  // namespace sphfn
