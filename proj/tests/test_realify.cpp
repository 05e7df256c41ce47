#include <gtest/gtest.h>

#include <Eigen/QR>
#include <random>

#include "sphfn/realify.hpp"

using namespace sphfn;

namespace {

CMatrix random_unitary(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<CMatrix> qr(a);
  return qr.householderQ() * CMatrix::Identity(m, m);
}

Quaternion random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return {g(rng), g(rng), g(rng), g(rng)};
}

Eigen::Vector4d as_vec(const Quaternion& q) { return {q.a, q.b, q.c, q.d}; }

}  // namespace

TEST(Realify, IdentityIsIdentity) {
  const Matrix r = realify(CMatrix::Identity(1, 1));
  EXPECT_TRUE(r.isApprox(Matrix::Identity(2, 2), 0.0));
}

TEST(Realify, ScalarIIsQuarterTurn) {
  CMatrix i(1, 1);
  i(0, 0) = Complex(0, 1);
  Matrix expected(2, 2);
  expected << 0, -1, 1, 0;
  EXPECT_EQ(realify(i), expected);
}

TEST(Realify, IsHomomorphismOnRandomPairs) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix a = random_unitary(2, rng), b = random_unitary(2, rng);
    const Matrix lhs = realify(a * b, 1e-10);
    const Matrix rhs = realify(a, 1e-10) * realify(b, 1e-10);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((lhs.transpose() * lhs - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Realify, ActsLikeComplexMultiplication) {
  std::mt19937_64 rng(3);
  const CMatrix u = random_unitary(3, rng);
  CVector z(3);
  z << Complex(1, 2), Complex(-0.5, 0.25), Complex(0, -1);
  Vector flat(6);
  for (int i = 0; i < 3; ++i) {
    flat(2 * i) = z(i).real();
    flat(2 * i + 1) = z(i).imag();
  }
  const CVector w = u * z;
  const Vector rw = realify(u, 1e-10) * flat;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(rw(2 * i), w(i).real(), 1e-12);
    EXPECT_NEAR(rw(2 * i + 1), w(i).imag(), 1e-12);
  }
}

TEST(Realify, RejectsNonUnitary) {
  CMatrix a(1, 1);
  a(0, 0) = Complex(2, 0);
  try {
    realify(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonUnitaryInput);
  }
  EXPECT_THROW(realify(CMatrix::Zero(1, 2)), Error);
}

TEST(Quaternion, HamiltonRules) {
  const Quaternion i{0, 1, 0, 0}, j{0, 0, 1, 0}, k{0, 0, 0, 1};
  EXPECT_EQ(as_vec(i * j), as_vec(k));
  EXPECT_EQ(as_vec(j * k), as_vec(i));
  EXPECT_EQ(as_vec(k * i), as_vec(j));
  EXPECT_EQ(as_vec(i * i), Eigen::Vector4d(-1, 0, 0, 0));
  EXPECT_EQ(as_vec(j * i), -as_vec(k));
}

TEST(Quaternion, MultiplicationMatrices) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const Quaternion p = random_quaternion(rng), q = random_quaternion(rng);
    EXPECT_LE((left_mult(p) * as_vec(q) - as_vec(p * q)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((right_mult(q) * as_vec(p) - as_vec(p * q)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR((p * q).norm2(), p.norm2() * q.norm2(), 1e-10 * p.norm2() * q.norm2());
  }
}

TEST(Quaternion, RealifiedMatricesCompose) {
  std::mt19937_64 rng(9);
  QuaternionMatrix a(2), b(2), ab(2);
  for (auto& e : a.entries) e = random_quaternion(rng);
  for (auto& e : b.entries) e = random_quaternion(rng);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) ab(i, j) = ab(i, j) + a(i, l) * b(l, j);
  const Matrix lhs = realify_quaternionic(ab);
  const Matrix rhs = realify_quaternionic(a) * realify_quaternionic(b);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Quaternion, RightScalarCommutesWithLeftAction) {
  std::mt19937_64 rng(13);
  QuaternionMatrix a(2);
  for (auto& e : a.entries) e = random_quaternion(rng);
  Quaternion q = random_quaternion(rng);
  q = q * (1.0 / std::sqrt(q.norm2()));
  const Matrix l = realify_quaternionic(a), r = realify_right_scalar(q, 2);
  EXPECT_LE((l * r - r * l).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((r.transpose() * r - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
}
