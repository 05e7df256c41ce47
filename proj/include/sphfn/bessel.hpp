#pragma once

// Closed-form spherical functions for groups transitive on spheres:
//   φ(x) = c(n) (λr)^{-ν} J_ν(λr),  ν = (n-2)/2,  λ² = b(ξ,ξ),  r = |x|,
// evaluated through the Poisson integral
//   π^{-1/2} Γ(n/2)/Γ((n-1)/2) ∫_0^π cos(λ r cos θ) sin^{n-2}θ dθ,
// which is entire and even in λ. The J_ν power series is kept as an
// independent cross-check.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "types.hpp"

namespace sphfn {

/// J_ν(z) by its ascending series, summed in extended precision.
inline Complex bessel_j(double nu, Complex z) {
  if (nu < 0) throw Error(ErrorKind::InvalidArgument, "bessel_j requires nu >= 0");
  if (std::abs(z) > 700.0) throw Error(ErrorKind::OverflowRisk, "|z| > 700 in bessel_j");
  if (z == Complex(0.0, 0.0)) return nu == 0.0 ? Complex(1.0, 0.0) : Complex(0.0, 0.0);

  using LC = std::complex<long double>;
  const LC half_z = LC(z) / 2.0L;
  const LC q = -half_z * half_z;
  const long double lnu = nu;
  // (z/2)^ν / Γ(ν+1) on the principal branch
  LC term = std::exp(lnu * std::log(half_z) - std::lgamma(lnu + 1.0L));
  LC sum = term;
  for (int m = 1; m <= 400; ++m) {
    term *= q / (static_cast<long double>(m) * (lnu + m));
    sum += term;
    if (std::abs(term) < 1e-17L * std::abs(sum) || term == LC(0)) {
      return Complex(static_cast<double>(sum.real()), static_cast<double>(sum.imag()));
    }
  }
  throw Error(ErrorKind::SeriesNotConverged, "bessel_j series did not converge in 400 terms");
}

/// c(n) = π^{-1/2} 2^{(n-2)/2} Γ(1/2) Γ(n/2); with Γ(1/2) = √π this is
/// 2^{(n-2)/2} Γ(n/2), so c(2) = 1 exactly.
inline double normalization_constant(int n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "normalization_constant requires n >= 2");
  return std::exp2((n - 2) / 2.0) * std::tgamma(n / 2.0);
}

/// Gauss–Legendre nodes and weights on [-1, 1]; cached per node count.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline std::shared_ptr<const GaussLegendreRule> gauss_legendre(int count) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const GaussLegendreRule>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(count); it != cache.end()) return it->second;
  }
  auto rule = std::make_shared<GaussLegendreRule>();
  rule->nodes.resize(static_cast<size_t>(count));
  rule->weights.resize(static_cast<size_t>(count));
  const int half = (count + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (count + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= count; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = count * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule->nodes[static_cast<size_t>(i)] = -x;
    rule->nodes[static_cast<size_t>(count - 1 - i)] = x;
    rule->weights[static_cast<size_t>(i)] = w;
    rule->weights[static_cast<size_t>(count - 1 - i)] = w;
  }
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(count, std::move(rule)).first->second;
}

/// Normalized Poisson integral with a fixed Gauss–Legendre rule on [0, π].
inline Complex poisson_integral_form(int n, Complex lambda, double r, int nodes) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "poisson_integral_form requires n >= 2");
  if (nodes < 8) throw Error(ErrorKind::InvalidArgument, "poisson_integral_form requires >= 8 nodes");
  if (r < 0) throw Error(ErrorKind::InvalidArgument, "radius must be non-negative");
  if (std::abs(lambda.imag()) * r > 700.0) {
    throw Error(ErrorKind::OverflowRisk, "|Im lambda| * r > 700");
  }
  const double prefactor = std::exp(std::lgamma(n / 2.0) - std::lgamma((n - 1) / 2.0)) / std::sqrt(kPi);
  const auto rule = gauss_legendre(nodes);
  const Complex lr = lambda * r;
  Complex sum = 0;
  for (size_t i = 0; i < rule->nodes.size(); ++i) {
    const double theta = 0.5 * kPi * (rule->nodes[i] + 1.0);
    const double s = std::sin(theta);
    sum += rule->weights[i] * std::cos(lr * std::cos(theta)) * std::pow(s, n - 2);
  }
  return prefactor * 0.5 * kPi * sum;
}

struct ClosedFormQuery {
  int n = 2;
  Complex lambda{0, 0};  // principal √b(ξ,ξ)
  double r = 0;          // |x|
};

/// n = 1: cos(λr). n ≥ 2: Poisson integral with node doubling from 32 to
/// 4096 until successive values agree to 1e-13.
inline Complex closed_form_spherical(const ClosedFormQuery& q) {
  if (q.n < 1) throw Error(ErrorKind::InvalidArgument, "closed form requires n >= 1");
  if (q.r < 0) throw Error(ErrorKind::InvalidArgument, "radius must be non-negative");
  if (q.r == 0.0 || q.lambda == Complex(0.0, 0.0)) return 1.0;
  if (std::abs(q.lambda.imag()) * q.r > 700.0) {
    throw Error(ErrorKind::OverflowRisk, "|Im lambda| * r > 700");
  }
  if (q.n == 1) return std::cos(q.lambda * q.r);
  Complex prev = poisson_integral_form(q.n, q.lambda, q.r, 32);
  for (int nodes = 64; nodes <= 4096; nodes *= 2) {
    const Complex next = poisson_integral_form(q.n, q.lambda, q.r, nodes);
    if (std::abs(next - prev) <= 1e-13 * std::max(1.0, std::abs(next))) return next;
    prev = next;
  }
  throw Error(ErrorKind::QuadratureNotConverged, "Poisson integral unstable at 4096 nodes");
}

/// Principal square root of b(ξ,ξ).
inline Complex spectral_lambda(const CVector& xi) {
  return std::sqrt((xi.array() * xi.array()).sum());
}

}  // namespace sphfn
