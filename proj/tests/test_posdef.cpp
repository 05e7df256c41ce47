#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sphfn/posdef.hpp"

using namespace sphfn;

namespace {

CVector cvec(std::initializer_list<Complex> v) {
  CVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const auto& z : v) out(i++) = z;
  return out;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double z : v) out(i++) = z;
  return out;
}

template <typename F>
ErrorKind error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidArgument;
}

RadialProfile gaussian(double alpha, double support, int intervals) {
  return RadialProfile::sample([alpha](double r) { return Complex(std::exp(-alpha * r * r)); }, support, intervals);
}

// 2π ∫₀^R r f(r) J₀(λr) dr by composite Simpson with std::cyl_bessel_j.
double hankel_oracle(double alpha, double lambda, double support, int panels) {
  const double h = support / panels;
  double s = 0;
  for (int i = 0; i <= panels; ++i) {
    const double r = i * h, w = (i == 0 || i == panels) ? 1 : (i % 2 ? 4 : 2);
    s += w * r * std::exp(-alpha * r * r) * std::cyl_bessel_j(0.0, lambda * r);
  }
  return 2 * kPi * s * h / 3;
}

CVector lambda_e1(int n, Complex lambda) {
  CVector xi = CVector::Zero(n);
  xi(0) = lambda;
  return xi;
}

}  // namespace

TEST(GramMatrix, SingleMotionIsOne) {
  const auto h = build_group(cyclic4());
  const auto r = gram_matrix(h, cvec({1, 2}), {MotionElement{vec({0.5, 1}), rot90()}}, {});
  ASSERT_EQ(r.matrix.rows(), 1);
  EXPECT_EQ(r.matrix(0, 0), Complex(1, 0));
  EXPECT_EQ(r.verdict, PsdVerdict::ConsistentPSD);
}

TEST(GramMatrix, ZeroParameterGivesAllOnes) {
  const auto h = build_group(dihedral8());
  const auto r = posdef_verdict(h, cvec({0, 0}), {});
  EXPECT_EQ(r.matrix.rows(), 24);
  EXPECT_TRUE(r.matrix.isApprox(CMatrix::Ones(24, 24), 1e-15));
  EXPECT_NEAR(r.min_eigenvalue, 0.0, 1e-12);
  EXPECT_EQ(r.verdict, PsdVerdict::ConsistentPSD);
}

TEST(GramMatrix, ImaginaryParameterOnCircleViolates) {
  const auto h = build_group(GroupSpec::special_orthogonal(2));
  const std::vector<MotionElement> motions = {MotionElement::identity(2), MotionElement::translate(vec({3, 0}))};
  const auto r = gram_matrix(h, cvec({Complex(0, 1), 0}), motions, {});
  EXPECT_NEAR(std::abs(r.matrix(1, 0)), std::cyl_bessel_i(0.0, 3.0), 1e-10);
  EXPECT_NEAR(std::abs(r.matrix(1, 0)), 4.8808, 1e-4);
  EXPECT_EQ(r.verdict, PsdVerdict::ViolatedPSD);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_LT(r.quadratic_form.real(), -r.threshold);
  EXPECT_NEAR(r.quadratic_form.real(), r.min_eigenvalue, 1e-12);
  EXPECT_NEAR(r.quadratic_form.imag(), 0.0, 1e-12);
  // 2×2 with unit diagonal: eigenvalues 1 ± |a|.
  EXPECT_NEAR(r.min_eigenvalue, 1 - std::cyl_bessel_i(0.0, 3.0), 1e-10);
}

TEST(GramMatrix, DefaultVerdictForImaginaryParameter) {
  const auto h = build_group(GroupSpec::special_orthogonal(2));
  const auto r = posdef_verdict(h, cvec({Complex(0, 1), 0}), {});
  EXPECT_EQ(r.points.size(), 24u);
  EXPECT_EQ(r.verdict, PsdVerdict::ViolatedPSD);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_LT(gram_form(r.matrix, *r.witness).real(), -r.threshold);
}

TEST(GramMatrix, HermitianWithUnitDiagonal) {
  const auto h = build_group(GroupSpec::special_orthogonal(3));
  EvalConfig cfg;
  cfg.samples = 2000;
  const auto r = posdef_verdict(h, cvec({1, Complex(0.2, 0.1), -0.5}), cfg);
  EXPECT_EQ(r.matrix, r.matrix.adjoint().eval());
  for (Eigen::Index i = 0; i < r.matrix.rows(); ++i) EXPECT_EQ(r.matrix(i, i), Complex(1, 0));
}

TEST(GramMatrix, RealParametersAreConsistentForExactGroups) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const std::vector<GroupSpec> specs = {cyclic4(), dihedral8(), GroupSpec::special_orthogonal(2),
                                        GroupSpec::orthogonal(2), GroupSpec::torus(2)};
  for (const auto& s : specs) {
    const auto h = build_group(s);
    for (int t = 0; t < 10; ++t) {
      CVector xi(h.dim());
      for (int d = 0; d < h.dim(); ++d) xi(d) = 1.5 * g(rng);
      EvalConfig cfg;
      cfg.seed = static_cast<std::uint64_t>(t);
      const auto r = posdef_verdict(h, xi, cfg);
      EXPECT_GE(r.min_eigenvalue, -1e-9) << to_string(s.kind);
      EXPECT_EQ(r.verdict, PsdVerdict::ConsistentPSD);
    }
  }
}

TEST(GramMatrix, RealParametersMonteCarlo) {
  const auto h = build_group(GroupSpec::special_orthogonal(3));
  EvalConfig cfg;
  cfg.samples = 5000;
  const auto r = posdef_verdict(h, cvec({1.2, -0.3, 0.8}), cfg);
  EXPECT_EQ(r.method, EvalMethod::MonteCarlo);
  EXPECT_GT(r.propagated_stderr, 0.0);
  EXPECT_GE(r.min_eigenvalue, -3 * r.propagated_stderr);
  EXPECT_EQ(r.verdict, PsdVerdict::ConsistentPSD);
}

TEST(GramMatrix, RealParametersClosedForm) {
  const auto h = build_group(GroupSpec::special_orthogonal(4));
  EvalConfig cfg;
  cfg.method = MethodChoice::ClosedForm;
  const auto r = posdef_verdict(h, cvec({1.2, -0.3, 0.8, 2}), cfg);
  EXPECT_GE(r.min_eigenvalue, -1e-9);
}

TEST(GramMatrix, OrbitMatesGiveTheSameMatrix) {
  const auto h = build_group(dihedral8());
  const CVector xi = cvec({0.7, -1.3});
  const auto motions = sample_motions(h, 5, 12, 5.0);
  const auto a = gram_matrix(h, xi, motions, {});
  for (const auto& k : h.elements()) {
    const auto b = gram_matrix(h, (k.cast<Complex>() * xi).eval(), motions, {});
    EXPECT_LE((a.matrix - b.matrix).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(GramMatrix, MotionSampling) {
  const auto h = build_group(GroupSpec::special_orthogonal(3));
  const auto m = sample_motions(h, 1, 30, 5.0);
  ASSERT_EQ(m.size(), 30u);
  EXPECT_EQ(m[0].translation, Vector::Zero(3));
  for (const auto& g : m) {
    EXPECT_LE(g.translation.norm(), 5.0);
    EXPECT_LE((g.rotation.transpose() * g.rotation - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  }
  const auto g2 = sample_motions(build_group(GroupSpec::g2()), 1, 4, 5.0);
  EXPECT_EQ(g2[2].rotation, Matrix::Identity(7, 7));
  EXPECT_EQ(error_of([] { gram_matrix(build_group(cyclic4()), cvec({1, 0}), {}, {}); }), ErrorKind::InvalidArgument);
}

TEST(Transform, ZeroProfile) {
  const auto h = build_group(GroupSpec::special_orthogonal(2));
  const auto p = RadialProfile::sample([](double) { return Complex(0); }, 6.0, 600);
  for (const auto& t : spherical_transform(p, h, {lambda_e1(2, 0), lambda_e1(2, 2)}, {})) {
    EXPECT_EQ(t.value, Complex(0, 0));
  }
}

TEST(Transform, GaussianHankelPair) {
  const auto h = build_group(GroupSpec::special_orthogonal(2));
  const auto p = gaussian(1.0, 6.0, 6000);
  const std::vector<double> lambdas = {0, 1, 2, 3};
  std::vector<CVector> xis;
  for (double l : lambdas) xis.push_back(lambda_e1(2, l));
  const auto out = spherical_transform(p, h, xis, {});
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double exact = kPi * std::exp(-lambdas[i] * lambdas[i] / 4);
    const double oracle = hankel_oracle(1.0, lambdas[i], 6.0, 60000);
    EXPECT_LE(std::abs(out[i].value - exact) / exact, 1e-3);
    // The refinement estimate tracks the true O(h²) error.
    EXPECT_LE(std::abs(out[i].value - oracle), 1.5 * out[i].error_estimate + 1e-12);
    EXPECT_GE(std::abs(out[i].value - oracle), 0.5 * out[i].error_estimate);
    EXPECT_LE(out[i].error_estimate, 1e-3 * exact);
  }
  EXPECT_NEAR(out[2].value.real(), 1.15573, 1e-5);
}

TEST(Transform, ZeroParameterIsTheIntegral) {
  const auto h = build_group(GroupSpec::special_orthogonal(3));
  const auto p = gaussian(0.5, 9.0, 9000);
  const auto out = spherical_transform(p, h, {lambda_e1(3, 0)}, {});
  const double integral = std::pow(2 * kPi, 1.5);  // (π/α)^{3/2}
  EXPECT_LE(std::abs(out[0].value - integral) / integral, 1e-6);
}

TEST(Transform, NarrowBumpIsItsMass) {
  const auto h = build_group(GroupSpec::special_orthogonal(2));
  const auto p = gaussian(400.0, 0.3, 3000);
  const double mass = kPi / 400.0;
  for (double l : {0.5, 2.0, 5.0}) {
    const auto out = spherical_transform(p, h, {lambda_e1(2, l)}, {});
    EXPECT_LE(std::abs(out[0].value - mass) / mass, 1e-3 * (1 + l * l));
  }
}

TEST(Transform, Linearity) {
  const auto h = build_group(GroupSpec::special_orthogonal(2));
  auto f = [](double r) { return Complex(std::exp(-r * r)); };
  auto g = [](double r) { return Complex(r * r * std::exp(-2 * r * r), 0.5 * std::exp(-r * r / 2)); };
  const Complex a(2, -1), b(0.5, 3);
  const auto pf = RadialProfile::sample(f, 8.0, 4000), pg = RadialProfile::sample(g, 8.0, 4000);
  const auto pc = RadialProfile::sample([&](double r) { return a * f(r) + b * g(r); }, 8.0, 4000);
  const std::vector<CVector> xis = {lambda_e1(2, 0), lambda_e1(2, 1.5), lambda_e1(2, Complex(0.5, 0.5))};
  const auto tf = spherical_transform(pf, h, xis, {});
  const auto tg = spherical_transform(pg, h, xis, {});
  const auto tc = spherical_transform(pc, h, xis, {});
  for (std::size_t i = 0; i < xis.size(); ++i) {
    EXPECT_LE(std::abs(tc[i].value - (a * tf[i].value + b * tg[i].value)), 1e-12);
  }
}

TEST(Transform, IndependentOfTheGroupForRadialProfiles) {
  const auto p = gaussian(1.0, 6.0, 6000);
  const auto a = spherical_transform(p, build_group(GroupSpec::special_orthogonal(4)), {lambda_e1(4, 1.3)}, {});
  const auto b = spherical_transform(p, build_group(GroupSpec::special_unitary(2)), {lambda_e1(4, 1.3)}, {});
  EXPECT_EQ(a[0].value, b[0].value);
  // (π/α)^{n/2} e^{−λ²/4α}
  EXPECT_LE(std::abs(a[0].value - kPi * kPi * std::exp(-1.3 * 1.3 / 4)), 1e-6);
}

TEST(Transform, GridTooCoarse) {
  const auto h = build_group(GroupSpec::special_orthogonal(2));
  const auto p = gaussian(1.0, 6.0, 12);
  EXPECT_EQ(error_of([&] { spherical_transform(p, h, {lambda_e1(2, 3)}, {}); }), ErrorKind::GridTooCoarse);
}

TEST(Transform, ProfileValidation) {
  const auto h = build_group(GroupSpec::special_orthogonal(2));
  RadialProfile bad{{0, 1, 1}, {1, 1, 1}, 1};
  EXPECT_EQ(error_of([&] { spherical_transform(bad, h, {lambda_e1(2, 1)}, {}); }), ErrorKind::InvalidArgument);
  RadialProfile neg{{-1, 0, 1}, {1, 1, 1}, 1};
  EXPECT_EQ(error_of([&] { spherical_transform(neg, h, {lambda_e1(2, 1)}, {}); }), ErrorKind::InvalidArgument);
  RadialProfile ok{{0, 1, 2}, {1, 1, 1}, 0};
  EXPECT_EQ(error_of([&] { spherical_transform(ok, h, {lambda_e1(2, 1)}, {}); }), ErrorKind::InvalidArgument);
}

TEST(Transform, GridFunctionMatchesRadialRoute) {
  GridFunction f{[](const Vector& x) { return Complex(std::exp(-x.squaredNorm())); }, 6.0, 121};
  for (const auto& spec : {cyclic4(), GroupSpec::special_orthogonal(2)}) {
    const auto h = build_group(spec);
    const auto out = spherical_transform(f, h, {lambda_e1(2, 1.0), lambda_e1(2, 0.0)}, {});
    EXPECT_LE(std::abs(out[0].value - kPi * std::exp(-0.25)), 1e-6) << to_string(spec.kind);
    EXPECT_LE(std::abs(out[1].value - kPi), 1e-6);
  }
}

TEST(Transform, GridFunctionUsesReflectedArgument) {
  // f(x) = e^{−|x−c|²} is not K-invariant; its transform against φ_ξ(−x)
  // for the trivial group is e^{−i b(c, ξ)} π e^{−b(ξ,ξ)/4}.
  GridFunction f{[](const Vector& x) { return Complex(std::exp(-(x - Vector::Unit(2, 0)).squaredNorm())); }, 7.0, 141};
  const auto h = build_group(GroupSpec::finite(2, {Matrix::Identity(2, 2)}));
  const auto out = spherical_transform(f, h, {lambda_e1(2, 1.5)}, {});
  const Complex expected = std::exp(Complex(0, -1.5)) * kPi * std::exp(-1.5 * 1.5 / 4);
  EXPECT_LE(std::abs(out[0].value - expected), 1e-6);
}

TEST(Transform, GridFunctionNeedsAnEvaluator) {
  GridFunction f{[](const Vector& x) { return Complex(std::exp(-x.squaredNorm())); }, 3.0, 5};
  const auto g2 = build_group(GroupSpec::g2());
  EXPECT_EQ(error_of([&] { spherical_transform(f, g2, {lambda_e1(7, 1.0)}, {}); }), ErrorKind::UnsupportedSampler);
  GridFunction even{f.f, 3.0, 6};
  EXPECT_EQ(error_of([&] { spherical_transform(even, build_group(cyclic4()), {lambda_e1(2, 1.0)}, {}); }),
            ErrorKind::InvalidArgument);
}
