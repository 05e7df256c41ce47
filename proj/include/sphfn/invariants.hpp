#pragma once

// Points of the categorical quotient C^n // K_C as fingerprints: the values at
// ξ of a generating set of K-invariant polynomials. Two parameters give the
// same spherical function exactly when their fingerprints agree.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "group.hpp"
#include "spherical.hpp"
#include "types.hpp"

namespace sphfn {

using Exponent = std::vector<int>;

/// Sparse polynomial on C^n: exponent tuple → coefficient.
struct InvariantPolynomial {
  std::map<Exponent, Complex> terms;
  int degree = 0;

  Complex operator()(const CVector& xi) const {
    Complex sum = 0;
    for (const auto& [exps, coeff] : terms) {
      Complex t = coeff;
      for (std::size_t i = 0; i < exps.size(); ++i) {
        for (int e = 0; e < exps[i]; ++e) t *= xi(static_cast<Eigen::Index>(i));
      }
      sum += t;
    }
    return sum;
  }
};

struct QuotientPoint {
  std::vector<Complex> values;
  std::string basis_id;
};

namespace detail {

using Poly = std::map<Exponent, Complex>;

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ea, ca] : a) {
    for (const auto& [eb, cb] : b) {
      Exponent e(ea.size());
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      out[e] += ca * cb;
    }
  }
  return out;
}

/// C(n + d, n), saturating at `limit`.
inline double count_monomials_upto(int n, int max_degree) {
  double c = 1;
  for (int i = 1; i <= n; ++i) c = c * (max_degree + i) / i;
  return c - 1;  // without the constant
}

/// Exponents with 1 ≤ |a| ≤ max_degree, by degree then reverse-lexicographic.
inline std::vector<Exponent> monomials_upto(int n, int max_degree) {
  std::vector<Exponent> out;
  for (int d = 1; d <= max_degree; ++d) {
    Exponent e(static_cast<size_t>(n), 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == n - 1) {
        e[static_cast<size_t>(pos)] = left;
        out.push_back(e);
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[static_cast<size_t>(pos)] = k;
        rec(pos + 1, left - k);
      }
    };
    rec(0, d);
  }
  return out;
}

/// Reynolds average of a monomial, expanded: (1/|K|) Σ_k Π_i ((kξ)_i)^{a_i}.
inline Poly reynolds_expand(const Exponent& a, const std::vector<Matrix>& elements) {
  const int n = static_cast<int>(a.size());
  Poly total;
  for (const auto& k : elements) {
    Poly prod{{Exponent(static_cast<size_t>(n), 0), Complex(1.0)}};
    for (int i = 0; i < n; ++i) {
      if (a[static_cast<size_t>(i)] == 0) continue;
      Poly linear;
      for (int j = 0; j < n; ++j) {
        if (k(i, j) == 0.0) continue;
        Exponent e(static_cast<size_t>(n), 0);
        e[static_cast<size_t>(j)] = 1;
        linear[e] = k(i, j);
      }
      for (int p = 0; p < a[static_cast<size_t>(i)]; ++p) prod = poly_mul(prod, linear);
    }
    for (const auto& [e, c] : prod) total[e] += c;
  }
  double biggest = 0;
  for (auto& [e, c] : total) {
    c /= static_cast<double>(elements.size());
    biggest = std::max(biggest, std::abs(c));
  }
  for (auto it = total.begin(); it != total.end();) {
    if (std::abs(it->second) <= 1e-12 * biggest) {
      it = total.erase(it);
    } else {
      ++it;
    }
  }
  return total;
}

inline std::string group_tag(const GroupHandle& h) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&](std::int64_t v) { hash = (hash ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL; };
  mix(h.dim());
  for (const auto& k : h.elements()) {
    for (Eigen::Index i = 0; i < k.size(); ++i) mix(std::llround(k(i) * 1e9));
  }
  std::ostringstream os;
  os << std::hex << hash;
  return os.str();
}

}  // namespace detail

struct ReynoldsOptions {
  int max_degree = 0;  // 0 → |K| (Noether bound)
  std::size_t monomial_cap = 200000;
  std::uint64_t probe_seed = 0x1d6a5eedULL;
};

/// Linearly independent Reynolds-averaged monomials of degree ≤ max_degree.
/// With max_degree = |K| they span all invariants of that degree and hence
/// generate the invariant ring. Independence is decided on evaluations at
/// fixed-seed complex Gaussian probes (twice as many probes as candidates).
inline std::vector<InvariantPolynomial> reynolds_basis(const GroupHandle& h, const ReynoldsOptions& opt = {}) {
  if (!h.is_finite()) throw Error(ErrorKind::NotFinite, "reynolds_basis requires a finite group");
  const int n = h.dim();
  const int max_degree = opt.max_degree > 0 ? opt.max_degree : static_cast<int>(h.order());
  if (detail::count_monomials_upto(n, max_degree) > static_cast<double>(opt.monomial_cap)) {
    throw Error(ErrorKind::DegreeCapExceeded,
                "more than " + std::to_string(opt.monomial_cap) + " monomials up to degree " +
                    std::to_string(max_degree));
  }
  const auto candidates = detail::monomials_upto(n, max_degree);
  const auto& elements = h.elements();
  const std::size_t probes = 2 * candidates.size();

  // powers[p][k][i][e] = ((k·probe_p)_i)^e, flattened.
  std::mt19937_64 rng(opt.probe_seed);
  std::normal_distribution<double> normal;
  const std::size_t nk = elements.size();
  const auto stride_e = static_cast<std::size_t>(max_degree + 1);
  std::vector<Complex> powers(probes * nk * static_cast<std::size_t>(n) * stride_e);
  std::vector<Complex> raw_powers(probes * static_cast<std::size_t>(n) * stride_e);
  for (std::size_t p = 0; p < probes; ++p) {
    CVector z(n);
    for (int i = 0; i < n; ++i) z(i) = Complex(normal(rng), normal(rng)) / std::sqrt(2.0);
    for (std::size_t ki = 0; ki < nk; ++ki) {
      const CVector y = elements[ki].cast<Complex>() * z;
      for (int i = 0; i < n; ++i) {
        Complex acc = 1.0;
        for (std::size_t e = 0; e < stride_e; ++e) {
          powers[((p * nk + ki) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)) * stride_e + e] = acc;
          acc *= y(i);
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      Complex acc = 1.0;
      for (std::size_t e = 0; e < stride_e; ++e) {
        raw_powers[(p * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)) * stride_e + e] = acc;
        acc *= z(i);
      }
    }
  }

  std::vector<CVector> orthonormal;
  std::vector<InvariantPolynomial> basis;
  const auto np = static_cast<Eigen::Index>(probes);
  for (const auto& a : candidates) {
    CVector v(np), raw(np);
    for (std::size_t p = 0; p < probes; ++p) {
      Complex avg = 0;
      for (std::size_t ki = 0; ki < nk; ++ki) {
        Complex t = 1.0;
        for (int i = 0; i < n; ++i) {
          t *= powers[((p * nk + ki) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)) * stride_e +
                      static_cast<std::size_t>(a[static_cast<size_t>(i)])];
        }
        avg += t;
      }
      v(static_cast<Eigen::Index>(p)) = avg / static_cast<double>(nk);
      Complex m = 1.0;
      for (int i = 0; i < n; ++i) {
        m *= raw_powers[(p * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)) * stride_e +
                        static_cast<std::size_t>(a[static_cast<size_t>(i)])];
      }
      raw(static_cast<Eigen::Index>(p)) = m;
    }
    const double norm = v.norm();
    if (norm <= 1e-10 * raw.norm()) continue;  // averages to the zero polynomial
    CVector r = v / norm;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : orthonormal) r -= q * q.dot(r);
    }
    const double residual = r.norm();
    if (residual <= 1e-8) continue;
    orthonormal.push_back(r / residual);
    InvariantPolynomial poly;
    poly.terms = detail::reynolds_expand(a, elements);
    poly.degree = std::accumulate(a.begin(), a.end(), 0);
    basis.push_back(std::move(poly));
  }
  return basis;
}

inline std::string reynolds_basis_id(const GroupHandle& h, int max_degree) {
  return "reynolds/" + detail::group_tag(h) + "/deg" + std::to_string(max_degree);
}

/// π(ξ) ∈ C^n // K_C as a vector of invariant values. Sphere-transitive K uses
/// the single invariant b(ξ,ξ); tori and block products are handled blockwise;
/// finite K uses the (cached) Reynolds basis.
inline QuotientPoint fingerprint(const GroupHandle& h, const SpectralParam& xi, int max_degree = 0) {
  require_same_dim(xi.size(), h.dim(), "xi");
  if (h.is_block_product()) {
    QuotientPoint out;
    out.basis_id = "product(";
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < h.factors().size(); ++i) {
      const auto& f = h.factors()[i];
      auto part = fingerprint(f, xi.segment(off, f.dim()), max_degree);
      off += f.dim();
      out.values.insert(out.values.end(), part.values.begin(), part.values.end());
      out.basis_id += (i ? "," : "") + part.basis_id;
    }
    out.basis_id += ")";
    return out;
  }
  if (h.is_sphere_transitive()) {
    return {{bilinear_b(xi, xi)}, "b(xi,xi)/n=" + std::to_string(h.dim())};
  }
  if (h.spec().kind == GroupKind::Torus) {
    QuotientPoint out;
    for (int blk = 0; blk < h.angular_blocks(); ++blk) {
      const CVector part = xi.segment(2 * blk, 2);
      out.values.push_back(bilinear_b(part, part));
    }
    out.basis_id = "torus/" + std::to_string(h.angular_blocks());
    return out;
  }
  if (h.is_finite()) {
    const int degree = max_degree > 0 ? max_degree : static_cast<int>(h.order());
    const std::string id = reynolds_basis_id(h, degree);
    const auto basis = h.cached<std::vector<InvariantPolynomial>>(id, [&] {
      ReynoldsOptions opt;
      opt.max_degree = degree;
      return reynolds_basis(h, opt);
    });
    QuotientPoint out;
    out.basis_id = id;
    for (const auto& p : *basis) out.values.push_back(p(xi));
    return out;
  }
  throw Error(ErrorKind::FingerprintUnsupported,
              "no invariant generating set for " + std::string(to_string(h.spec().kind)));
}

/// Entrywise |a − b| ≤ tol·(1 + max(|a|, |b|)).
inline bool equivalent(const QuotientPoint& a, const QuotientPoint& b, double tol = 1e-9) {
  if (a.basis_id != b.basis_id || a.values.size() != b.values.size()) {
    throw Error(ErrorKind::BasisMismatch, "fingerprints use different bases: " + a.basis_id + " vs " + b.basis_id);
  }
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double scale = 1.0 + std::max(std::abs(a.values[i]), std::abs(b.values[i]));
    if (std::abs(a.values[i] - b.values[i]) > tol * scale) return false;
  }
  return true;
}

/// φ_ξ^K = φ_ξ'^K, decided on the categorical quotient.
inline bool equivalent(const GroupHandle& h, const SpectralParam& xi, const SpectralParam& xi2,
                       double tol = 1e-9) {
  return equivalent(fingerprint(h, xi), fingerprint(h, xi2), tol);
}

struct Separation {
  Vector x;
  double difference = 0;
};

/// Searches a deterministic sweep of probe points (radii up to `radius`) for
/// one where |φ_ξ^K(x) − φ_ξ'^K(x)| exceeds `threshold`.
inline std::optional<Separation> separating_probe(const GroupHandle& h, const SpectralParam& xi,
                                                  const SpectralParam& xi2, const EvalConfig& cfg = {},
                                                  int probes = 64, double radius = 3.0,
                                                  double threshold = 1e-6) {
  const SphericalFunction a(h, xi, cfg), b(h, xi2, cfg);
  std::mt19937_64 rng(0x5eeb5eebULL);
  std::normal_distribution<double> normal;
  Separation best{Vector::Zero(h.dim()), 0.0};
  for (int p = 1; p <= probes; ++p) {
    Vector x(h.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
    x *= radius * p / probes / std::max(x.norm(), 1e-12);
    const double d = std::abs(a(x).value - b(x).value);
    if (d > best.difference) best = {x, d};
  }
  if (best.difference > threshold) return best;
  return std::nullopt;
}

}  // namespace sphfn
