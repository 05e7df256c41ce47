#pragma once

// Spherical functions φ_ξ^K(x) = ∫_K exp(i b(x, kξ)) dμ_K(k) on E^n = G/K,
// G = R^n · K, together with checks of their defining properties.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "bessel.hpp"
#include "group.hpp"
#include "motion.hpp"
#include "types.hpp"

namespace sphfn {

/// ξ ∈ C^n.
using SpectralParam = CVector;

/// C-bilinear (not Hermitian) extension of the dot product: Σ uᵢvᵢ.
inline Complex bilinear_b(const CVector& u, const CVector& v) {
  require_same_dim(u.size(), v.size(), "bilinear_b");
  return (u.array() * v.array()).sum();
}

inline Complex bilinear_b(const Vector& x, const CVector& xi) {
  require_same_dim(x.size(), xi.size(), "bilinear_b");
  return (x.cast<Complex>().array() * xi.array()).sum();
}

namespace detail {

inline Complex checked_exp_i(Complex b) {
  // |exp(i b)| = exp(-Im b)
  if (std::abs(b.imag()) > 700.0) {
    throw Error(ErrorKind::OverflowRisk, "|Im b(x, k xi)| > 700; exponent would overflow");
  }
  return std::exp(Complex(-b.imag(), b.real()));
}

}  // namespace detail

/// φ_ξ(x) = exp(i b(x, ξ)).
inline Complex quasicharacter(const Vector& x, const SpectralParam& xi) {
  return detail::checked_exp_i(bilinear_b(x, xi));
}

/// Average of exp(i b(x, kξ)) over the given elements; the K-averaging
/// formula restricted to a finite or sampled element set.
inline Complex quasicharacter_average(const Vector& x, const SpectralParam& xi,
                                      std::span<const Matrix> ks) {
  Complex sum = 0;
  for (const auto& k : ks) sum += quasicharacter(x, (k.cast<Complex>() * xi).eval());
  return sum / static_cast<double>(ks.size());
}

/// Induced function Ind_{R^n}^G(φ_ξ)(g) = ∫_K ζ̃(gk) dμ_K(k) with ζ̃(k'q) = φ_ξ(q),
/// averaged over the given elements. Writing g k = (x, k_g k) = (0, k_g k)(y, I)
/// gives y = (k_g k)ᵀ x.
inline Complex induced_average(const MotionElement& g, const SpectralParam& xi,
                               std::span<const Matrix> ks) {
  Complex sum = 0;
  for (const auto& k : ks) {
    const Matrix kk = g.rotation * k;
    sum += quasicharacter(kk.transpose() * g.translation, xi);
  }
  return sum / static_cast<double>(ks.size());
}

/// φ_ξ^K prepared for repeated evaluation. Monte Carlo draws its Haar samples
/// once at construction, so every evaluation through one instance shares them.
class SphericalFunction {
 public:
  SphericalFunction(GroupHandle group, SpectralParam xi, const EvalConfig& cfg)
      : group_(std::move(group)), xi_(std::move(xi)), cfg_(cfg) {
    require_same_dim(xi_.size(), group_.dim(), "xi");
    method_ = choose_method();
    prepare();
  }

  EvalMethod method() const { return method_; }
  const GroupHandle& group() const { return group_; }
  const SpectralParam& xi() const { return xi_; }
  const EvalConfig& config() const { return cfg_; }
  int dim() const { return group_.dim(); }

  EvalResult operator()(const Vector& x) const {
    require_same_dim(x.size(), dim(), "x");
    if (x.isZero(0.0)) return {Complex(1.0, 0.0), 0.0, method_};
    switch (method_) {
      case EvalMethod::ClosedForm:
        return {closed_form_spherical({dim(), lambda_, x.norm()}), 0.0, method_};
      case EvalMethod::TorusQuadrature:
        if (group_.angular_blocks() > 0) return {torus_value(x), 0.0, method_};
        [[fallthrough]];
      case EvalMethod::FiniteSum:
        if (!factors_.empty()) return product_value(x);
        return {rotated_mean(x).first, 0.0, method_};
      case EvalMethod::MonteCarlo: {
        if (!factors_.empty()) return product_value(x);
        const auto [mean, se] = rotated_mean(x);
        return {mean, se, method_};
      }
    }
    return {};
  }

  /// Rows are the parameter vectors kξ averaged over (finite or sampled K);
  /// empty for quadrature, closed-form and product evaluators.
  const CMatrix& rotated_params() const { return rotated_; }

 private:
  EvalMethod choose_method() const {
    switch (cfg_.method) {
      case MethodChoice::ClosedForm:
        if (group_.is_sphere_transitive() || group_.is_sign_group()) return EvalMethod::ClosedForm;
        throw Error(ErrorKind::ClosedFormUnavailable,
                    std::string(to_string(group_.spec().kind)) + " is not transitive on spheres");
      case MethodChoice::MonteCarlo:
        if (!group_.has_sampler()) {
          throw Error(ErrorKind::UnsupportedSampler,
                      "no Haar sampler for " + std::string(to_string(group_.spec().kind)));
        }
        return EvalMethod::MonteCarlo;
      case MethodChoice::Auto:
        break;
    }
    if (group_.is_finite()) return EvalMethod::FiniteSum;
    if (group_.angular_blocks() > 0) return EvalMethod::TorusQuadrature;
    if (group_.is_block_product() && group_.has_sampler()) {
      // Integrand and Haar measure both factor over the blocks.
      EvalMethod m = EvalMethod::FiniteSum;
      Eigen::Index off = 0;
      for (const auto& f : group_.factors()) {
        const EvalMethod fm = SphericalFunction(f, xi_.segment(off, f.dim()), cfg_).method();
        off += f.dim();
        if (fm == EvalMethod::MonteCarlo) return EvalMethod::MonteCarlo;
        if (fm == EvalMethod::TorusQuadrature) m = fm;
      }
      return m;
    }
    if (group_.has_sampler()) return EvalMethod::MonteCarlo;
    throw Error(ErrorKind::UnsupportedSampler,
                "no Haar sampler for " + std::string(to_string(group_.spec().kind)) +
                    "; request the closed form instead");
  }

  void prepare() {
    if (method_ == EvalMethod::ClosedForm) {
      lambda_ = spectral_lambda(xi_);
      return;
    }
    const bool auto_product = cfg_.method == MethodChoice::Auto && group_.is_block_product() &&
                              !group_.is_finite();
    if (auto_product) {
      Eigen::Index off = 0;
      for (std::size_t i = 0; i < group_.factors().size(); ++i) {
        const auto& f = group_.factors()[i];
        EvalConfig sub = cfg_;
        sub.seed = derive_seed(cfg_.seed, 0x9000 + i);
        factors_.emplace_back(f, xi_.segment(off, f.dim()), sub);
        off += f.dim();
      }
      return;
    }
    auto fill = [&](const std::vector<Matrix>& ks) {
      rotated_.resize(static_cast<Eigen::Index>(ks.size()), dim());
      for (std::size_t i = 0; i < ks.size(); ++i) {
        rotated_.row(static_cast<Eigen::Index>(i)) = (ks[i].cast<Complex>() * xi_).transpose();
      }
    };
    if (method_ == EvalMethod::FiniteSum) {
      fill(group_.elements());
    } else if (method_ == EvalMethod::MonteCarlo) {
      fill(haar_samples(group_, cfg_.seed, cfg_.samples));
    }
  }

  /// Mean of exp(i b(x, η)) over the prepared η = kξ, and its standard error
  /// (root of summed Re/Im sample variances over √N).
  std::pair<Complex, double> rotated_mean(const Vector& x) const {
    const double count = static_cast<double>(rotated_.rows());
    const CVector exponents = rotated_ * x.cast<Complex>();
    Complex sum = 0;
    double sum_re2 = 0, sum_im2 = 0;
    for (Eigen::Index i = 0; i < exponents.size(); ++i) {
      const Complex t = detail::checked_exp_i(exponents(i));
      sum += t;
      sum_re2 += t.real() * t.real();
      sum_im2 += t.imag() * t.imag();
    }
    const Complex mean = sum / count;
    if (method_ != EvalMethod::MonteCarlo || rotated_.rows() < 2) return {mean, 0.0};
    const double var_re = std::max(0.0, (sum_re2 - count * mean.real() * mean.real()) / (count - 1));
    const double var_im = std::max(0.0, (sum_im2 - count * mean.imag() * mean.imag()) / (count - 1));
    return {mean, std::sqrt((var_re + var_im) / count)};
  }

  /// One SO(2) block: (1/q) Σ_j exp(i b(x, R_{θ_j} ξ)) with θ_j = 2πj/q, and the
  /// reflected coset for O(2). Doubles q until successive sums agree to 1e-12.
  Complex angular_block(const Eigen::Vector2d& x, const Eigen::Vector2cd& xi) const {
    // b(x, R_θ ξ) = A cos θ + B sin θ
    const Complex a = x(0) * xi(0) + x(1) * xi(1);
    const Complex b = x(1) * xi(0) - x(0) * xi(1);
    const Complex ar = x(0) * xi(0) - x(1) * xi(1);  // ξ reflected to (ξ₁, −ξ₂)
    const Complex br = -x(1) * xi(0) - x(0) * xi(1);
    const bool reflect = group_.angular_reflection();
    auto sum_at = [&](int q, bool midpoints) {
      Complex s = 0;
      for (int j = 0; j < q; ++j) {
        const double t = 2 * kPi * (j + (midpoints ? 0.5 : 0.0)) / q;
        const double c = std::cos(t), sn = std::sin(t);
        s += detail::checked_exp_i(a * c + b * sn);
        if (reflect) s += detail::checked_exp_i(ar * c + br * sn);
      }
      return reflect ? s / 2.0 : s;
    };
    int q = std::max(cfg_.quadrature_nodes, 4);
    Complex nodes_sum = sum_at(q, false);
    Complex value = nodes_sum / static_cast<double>(q);
    for (; q <= (1 << 20); q *= 2) {
      nodes_sum += sum_at(q, true);
      const Complex refined = nodes_sum / static_cast<double>(2 * q);
      if (std::abs(refined - value) <= 1e-12 * std::max(1.0, std::abs(refined))) return refined;
      value = refined;
    }
    throw Error(ErrorKind::QuadratureNotConverged, "torus quadrature did not converge");
  }

  Complex torus_value(const Vector& x) const {
    Complex v = 1.0;
    for (int blk = 0; blk < group_.angular_blocks(); ++blk) {
      v *= angular_block(x.segment<2>(2 * blk), xi_.segment<2>(2 * blk));
    }
    return v;
  }

  EvalResult product_value(const Vector& x) const {
    Complex v = 1.0;
    double abs_var = 0.0;
    Eigen::Index off = 0;
    std::vector<EvalResult> parts;
    for (const auto& f : factors_) {
      parts.push_back(f(x.segment(off, f.dim())));
      off += f.dim();
      v *= parts.back().value;
    }
    // Var(Π a_i) ≈ Σ σ_i² Π_{j≠i} |a_j|²
    for (std::size_t i = 0; i < parts.size(); ++i) {
      double others = 1.0;
      for (std::size_t j = 0; j < parts.size(); ++j) {
        if (j != i) others *= std::norm(parts[j].value);
      }
      abs_var += parts[i].std_error * parts[i].std_error * others;
    }
    return {v, std::sqrt(abs_var), method_};
  }

  GroupHandle group_;
  SpectralParam xi_;
  EvalConfig cfg_;
  EvalMethod method_ = EvalMethod::FiniteSum;
  CMatrix rotated_;
  Complex lambda_{0, 0};
  std::vector<SphericalFunction> factors_;
};

/// φ_ξ^K(x) averaged over K; see SphericalFunction for method selection.
inline EvalResult eval_spherical(const GroupHandle& h, const SpectralParam& xi, const Vector& x,
                                 const EvalConfig& cfg = {}) {
  return SphericalFunction(h, xi, cfg)(x);
}

/// Evaluates φ_ξ^K at every point. Exact evaluators share one instance;
/// Monte Carlo uses an independent sample set per point seeded by
/// derive_seed(cfg.seed, index), so results do not depend on `threads`.
inline std::vector<EvalResult> evaluate_batch(const GroupHandle& h, const SpectralParam& xi,
                                              const std::vector<Vector>& points, const EvalConfig& cfg,
                                              int threads = 1) {
  std::vector<EvalResult> out(points.size());
  const SphericalFunction shared(h, xi, [&] {
    EvalConfig c = cfg;
    c.samples = std::min<std::int64_t>(c.samples, 2);  // only used to classify the method
    return c;
  }());
  const bool per_point = shared.method() == EvalMethod::MonteCarlo;
  const SphericalFunction& exact = shared;

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        if (per_point) {
          EvalConfig c = cfg;
          c.seed = derive_seed(cfg.seed, i);
          out[i] = SphericalFunction(h, xi, c)(points[i]);
        } else {
          out[i] = exact(points[i]);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int count = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// Functional equation φ(g₁)φ(g₂) = ∫_K φ(g₁ k g₂) dμ_K(k)

struct FunctionalEquationResult {
  double residual = 0;   // |φ(g₁)φ(g₂) − ∫_K φ(g₁kg₂)|
  double std_error = 0;  // combined standard error of both sides (0 when exact)
  bool exact = true;
};

namespace detail {

struct WeightedRule {
  std::vector<Matrix> elements;
  std::vector<double> weights;
};

/// Deterministic integration rule over K when one exists: the element list
/// of a finite group, or tensor trapezoid nodes for tori and SO(2)/O(2)/U(1).
inline std::optional<WeightedRule> exact_rule(const GroupHandle& h, int nodes_per_angle) {
  WeightedRule rule;
  if (h.is_finite()) {
    rule.elements = h.elements();
    rule.weights.assign(rule.elements.size(), 1.0 / static_cast<double>(rule.elements.size()));
    return rule;
  }
  if (h.angular_blocks() > 0) {
    const int blocks = h.angular_blocks();
    int q = std::max(nodes_per_angle, 4);
    while (blocks > 1 && std::pow(q, blocks) > 65536.0 && q > 8) q /= 2;
    std::vector<Matrix> one;
    for (int j = 0; j < q; ++j) one.push_back(rotation2(2 * kPi * j / q));
    if (h.angular_reflection()) {
      const std::size_t base = one.size();
      for (std::size_t j = 0; j < base; ++j) one.push_back(one[j] * reflect_y());
    }
    std::vector<std::vector<Matrix>> grid{{}};
    for (int blk = 0; blk < blocks; ++blk) {
      std::vector<std::vector<Matrix>> next;
      for (const auto& prefix : grid) {
        for (const auto& r : one) {
          auto p = prefix;
          p.push_back(r);
          next.push_back(std::move(p));
        }
      }
      grid = std::move(next);
    }
    for (const auto& blocks_list : grid) rule.elements.push_back(block_diag(blocks_list));
    rule.weights.assign(rule.elements.size(), 1.0 / static_cast<double>(rule.elements.size()));
    return rule;
  }
  if (h.is_block_product()) {
    std::vector<WeightedRule> parts;
    std::size_t total = 1;
    for (const auto& f : h.factors()) {
      auto r = exact_rule(f, nodes_per_angle);
      if (!r) return std::nullopt;
      total *= r->elements.size();
      if (total > 262144) return std::nullopt;
      parts.push_back(std::move(*r));
    }
    rule.elements = {Matrix::Identity(h.dim(), h.dim())};
    rule.weights = {1.0};
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const int d = h.factors()[i].dim();
      WeightedRule next;
      for (std::size_t a = 0; a < rule.elements.size(); ++a) {
        for (std::size_t b = 0; b < parts[i].elements.size(); ++b) {
          Matrix p = rule.elements[a];
          p.block(off, off, d, d) = parts[i].elements[b];
          next.elements.push_back(std::move(p));
          next.weights.push_back(rule.weights[a] * parts[i].weights[b]);
        }
      }
      rule = std::move(next);
      off += d;
    }
    return rule;
  }
  return std::nullopt;
}

}  // namespace detail

/// Residual of the functional equation for the lift φ(x, k) := φ_ξ^K(x).
/// Exact-evaluable groups integrate the right side with a deterministic rule;
/// otherwise both K-integrals on the right are sampled as one paired
/// estimator so its standard error is honest.
inline FunctionalEquationResult verify_functional_equation(const GroupHandle& h, const SpectralParam& xi,
                                                           const MotionElement& g1,
                                                           const MotionElement& g2,
                                                           const EvalConfig& cfg = {}) {
  require_same_dim(g1.dim(), h.dim(), "g1");
  require_same_dim(g2.dim(), h.dim(), "g2");
  const SphericalFunction phi(h, xi, cfg);
  const EvalResult a = phi(g1.translation);
  const EvalResult b = phi(g2.translation);
  const Complex lhs = a.value * b.value;
  const double lhs_var = std::norm(b.value) * a.std_error * a.std_error +
                         std::norm(a.value) * b.std_error * b.std_error;

  auto point = [&](const Matrix& k) -> Vector {
    return g1.translation + g1.rotation * (k * g2.translation);
  };

  FunctionalEquationResult out;
  if (phi.method() != EvalMethod::MonteCarlo) {
    if (auto rule = detail::exact_rule(h, cfg.quadrature_nodes)) {
      Complex rhs = 0;
      for (std::size_t i = 0; i < rule->elements.size(); ++i) {
        rhs += rule->weights[i] * phi(point(rule->elements[i])).value;
      }
      out.residual = std::abs(lhs - rhs);
      return out;
    }
    // Exact inner values, sampled outer integral.
    const auto ks = haar_samples(h, derive_seed(cfg.seed, 0xf00d), cfg.samples);
    Complex sum = 0;
    double s_re2 = 0, s_im2 = 0;
    for (const auto& k : ks) {
      const Complex v = phi(point(k)).value;
      sum += v;
      s_re2 += v.real() * v.real();
      s_im2 += v.imag() * v.imag();
    }
    const double count = static_cast<double>(ks.size());
    const Complex rhs = sum / count;
    const double var = std::max(0.0, (s_re2 - count * rhs.real() * rhs.real()) / (count - 1)) +
                       std::max(0.0, (s_im2 - count * rhs.imag() * rhs.imag()) / (count - 1));
    out.exact = false;
    out.residual = std::abs(lhs - rhs);
    out.std_error = std::sqrt(lhs_var + var / count);
    return out;
  }

  // Paired Monte Carlo: outer k from a fresh stream, inner kξ from phi's samples.
  // Product evaluators keep per-factor samples; draw joint ones for the pairing.
  const SphericalFunction joint = phi.rotated_params().rows() > 0 ? phi : [&] {
    EvalConfig c = cfg;
    c.method = MethodChoice::MonteCarlo;
    return SphericalFunction(h, xi, c);
  }();
  const CMatrix& inner = joint.rotated_params();
  const auto outer = haar_samples(h, derive_seed(cfg.seed, 0xf00d), inner.rows());
  Complex sum = 0;
  double s_re2 = 0, s_im2 = 0;
  for (Eigen::Index j = 0; j < inner.rows(); ++j) {
    const CVector eta = inner.row(j).transpose();
    const Complex v = detail::checked_exp_i(bilinear_b(point(outer[static_cast<size_t>(j)]), eta));
    sum += v;
    s_re2 += v.real() * v.real();
    s_im2 += v.imag() * v.imag();
  }
  const double count = static_cast<double>(inner.rows());
  const Complex rhs = sum / count;
  const double var = std::max(0.0, (s_re2 - count * rhs.real() * rhs.real()) / (count - 1)) +
                     std::max(0.0, (s_im2 - count * rhs.imag() * rhs.imag()) / (count - 1));
  out.exact = false;
  out.residual = std::abs(lhs - rhs);
  out.std_error = std::sqrt(lhs_var + var / count);
  return out;
}

// ---------------------------------------------------------------------------
// Laplacian eigenvalue

/// Estimates (Δφ)(x)/φ(x), Δ = −Σ∂²/∂xᵢ², by central second differences.
/// All 2n+1 stencil points share one evaluator (and so one sample set).
/// Converges to b(ξ,ξ) with O(h²) bias.
inline Complex eigen_check(const GroupHandle& h, const SpectralParam& xi, const Vector& x,
                           double step = 1e-3, const EvalConfig& cfg = {}) {
  if (!(step > 0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
  require_same_dim(x.size(), h.dim(), "x");
  require_same_dim(xi.size(), h.dim(), "xi");
  if (xi.isZero(0.0)) return 0.0;
  const SphericalFunction phi(h, xi, cfg);
  const Complex center = phi(x).value;
  if (std::abs(center) < 1e-8) {
    throw Error(ErrorKind::ProbeAtZero, "|phi(x)| < 1e-8 at the probe point; choose another x");
  }
  Complex second = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector up = x, down = x;
    up(i) += step;
    down(i) -= step;
    second += phi(up).value - 2.0 * center + phi(down).value;
  }
  return -second / (step * step) / center;
}

// ---------------------------------------------------------------------------
// Flat quotients Γ\E^n

/// True iff exp(i b(ξ, γ)) = 1 for every basis vector γ, i.e. b(ξ, γ) ∈ 2πZ
/// within `tol`. Additivity makes the basis sufficient for the whole lattice.
inline bool lattice_compatible(const SpectralParam& xi, const std::vector<Vector>& basis, double tol) {
  if (basis.empty()) return true;
  Matrix m(xi.size(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    require_same_dim(basis[j].size(), xi.size(), "lattice basis vector");
    m.col(static_cast<Eigen::Index>(j)) = basis[j];
  }
  if (Eigen::FullPivLU<Matrix>(m).rank() < static_cast<Eigen::Index>(basis.size())) {
    throw Error(ErrorKind::DegenerateBasis, "lattice basis vectors are linearly dependent");
  }
  for (const auto& gamma : basis) {
    const Complex c = bilinear_b(gamma, xi);
    const double turns = std::round(c.real() / (2 * kPi));
    if (std::abs(c.imag()) > tol || std::abs(c.real() - 2 * kPi * turns) > tol) return false;
  }
  return true;
}

}  // namespace sphfn
