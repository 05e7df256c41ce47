#pragma once

// Gram matrices [φ(g_j⁻¹ g_i)] over sampled motions, and the spherical
// transform f ↦ ∫ f(x) φ_ξ^K(−x) dx of compactly supported K-invariant f.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "bessel.hpp"
#include "group.hpp"
#include "motion.hpp"
#include "spherical.hpp"
#include "types.hpp"

namespace sphfn {

enum class PsdVerdict { ConsistentPSD, ViolatedPSD };

inline std::string_view to_string(PsdVerdict v) {
  return v == PsdVerdict::ConsistentPSD ? "ConsistentPSD" : "ViolatedPSD";
}

struct GramReport {
  std::vector<MotionElement> points;
  CMatrix matrix;
  Vector eigenvalues;  // ascending
  double min_eigenvalue = 0;
  PsdVerdict verdict = PsdVerdict::ConsistentPSD;
  std::optional<CVector> witness;  // c with Σ φ(g_j⁻¹g_i) c̄_j c_i < 0
  Complex quadratic_form{0, 0};    // value of that form at the witness
  double propagated_stderr = 0;    // Frobenius norm of entry standard errors
  double threshold = 0;            // violation must exceed this to count
  EvalMethod method = EvalMethod::FiniteSum;
};

struct PosdefOptions {
  int motion_count = 24;
  double ball_radius = 5.0;
  double tol_abs = 1e-9;
  double mc_sigmas = 5.0;
};

/// Σ_{i,j} A_ij c_i c̄_j
inline Complex gram_form(const CMatrix& a, const CVector& c) {
  return (c.transpose() * a * c.conjugate())(0, 0);
}

/// matrix[i][j] = φ_ξ^K(k_jᵀ(x_i − x_j)), the translation part of g_j⁻¹g_i,
/// then (A + Aᴴ)/2. One evaluator (and, under Monte Carlo, one sample set)
/// serves every entry.
inline GramReport gram_matrix(const GroupHandle& h, const SpectralParam& xi,
                              const std::vector<MotionElement>& motions, const EvalConfig& cfg,
                              const PosdefOptions& opt = {}) {
  if (motions.empty()) throw Error(ErrorKind::InvalidArgument, "gram_matrix needs at least one motion");
  for (const auto& g : motions) require_same_dim(g.dim(), h.dim(), "motion");
  const SphericalFunction phi(h, xi, cfg);
  const auto m = static_cast<Eigen::Index>(motions.size());
  CMatrix a(m, m);
  Matrix se(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const MotionElement rel = motion_compose(motion_inverse(motions[static_cast<size_t>(j)]),
                                               motions[static_cast<size_t>(i)]);
      const EvalResult r = phi(rel.translation);
      a(i, j) = r.value;
      se(i, j) = r.std_error;
    }
  }

  GramReport out;
  out.points = motions;
  out.method = phi.method();
  out.matrix = (a + a.adjoint()) / 2.0;
  out.propagated_stderr = se.norm();
  const Eigen::SelfAdjointEigenSolver<CMatrix> eig(out.matrix);
  out.eigenvalues = eig.eigenvalues();
  out.min_eigenvalue = out.eigenvalues(0);
  const bool sampled = phi.method() == EvalMethod::MonteCarlo;
  out.threshold = opt.tol_abs + (sampled ? opt.mc_sigmas * out.propagated_stderr : 0.0);
  if (out.min_eigenvalue < -out.threshold) {
    out.verdict = PsdVerdict::ViolatedPSD;
    const CVector c = eig.eigenvectors().col(0).conjugate();
    out.quadratic_form = gram_form(out.matrix, c);
    out.witness = c;
  }
  return out;
}

/// Default motion set: translations uniform in a ball, rotations Haar on K
/// (identity when K has no sampler). The first motion is the identity.
inline std::vector<MotionElement> sample_motions(const GroupHandle& h, std::uint64_t seed, int count,
                                                 double radius) {
  if (count <= 0) throw Error(ErrorKind::InvalidArgument, "motion count must be positive");
  const int n = h.dim();
  auto rng = detail::make_rng(derive_seed(seed, 0x6a3e));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  std::vector<Matrix> rotations;
  if (h.has_sampler()) rotations = haar_samples(h, derive_seed(seed, 0x6a3f), count);
  std::vector<MotionElement> out;
  out.push_back(MotionElement::identity(n));
  for (int i = 1; i < count; ++i) {
    Vector dir(n);
    for (int d = 0; d < n; ++d) dir(d) = normal(rng);
    const double len = radius * std::pow(unit(rng), 1.0 / n);
    const Vector x = dir * (len / std::max(dir.norm(), 1e-300));
    out.push_back({x, rotations.empty() ? Matrix::Identity(n, n) : rotations[static_cast<size_t>(i)]});
  }
  return out;
}

inline GramReport posdef_verdict(const GroupHandle& h, const SpectralParam& xi, const EvalConfig& cfg,
                                 const PosdefOptions& opt = {}) {
  return gram_matrix(h, xi, sample_motions(h, cfg.seed, opt.motion_count, opt.ball_radius), cfg, opt);
}

// ---------------------------------------------------------------------------
// Spherical transform

struct RadialProfile {
  std::vector<double> grid;  // strictly increasing, grid[0] ≥ 0
  std::vector<Complex> values;
  double support_radius = 0;  // values beyond are treated as 0

  void validate() const {
    if (grid.size() < 3 || grid.size() != values.size()) {
      throw Error(ErrorKind::InvalidArgument, "radial profile needs >= 3 matching grid/value entries");
    }
    if (grid.front() < 0) throw Error(ErrorKind::InvalidArgument, "radial grid must start at r >= 0");
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1])) throw Error(ErrorKind::InvalidArgument, "radial grid must increase strictly");
    }
    if (!(support_radius > 0) || !std::isfinite(support_radius)) {
      throw Error(ErrorKind::InvalidArgument, "support_radius must be positive and finite");
    }
  }

  /// Samples f on a uniform grid over [0, support] with `intervals` steps.
  static RadialProfile sample(const std::function<Complex(double)>& f, double support, int intervals) {
    RadialProfile p;
    p.support_radius = support;
    for (int i = 0; i <= intervals; ++i) {
      const double r = support * i / intervals;
      p.grid.push_back(r);
      p.values.push_back(f(r));
    }
    return p;
  }
};

/// Bounded function on the cube [−half_width, half_width]^n, sampled with
/// `points_per_axis` (odd) nodes per axis.
struct GridFunction {
  std::function<Complex(const Vector&)> f;
  double half_width = 1;
  int points_per_axis = 101;
};

struct TransformValue {
  Complex value{0, 0};
  double error_estimate = 0;
};

inline double sphere_area(int n) { return 2 * std::pow(kPi, n / 2.0) / std::tgamma(n / 2.0); }

namespace detail {

/// Trapezoid on the full grid and on every other node (keeping the last).
inline std::pair<Complex, Complex> trapezoid_pair(const std::vector<double>& r, const std::vector<Complex>& g) {
  auto trap = [&](const std::vector<std::size_t>& idx) {
    Complex s = 0;
    for (std::size_t k = 1; k < idx.size(); ++k) {
      s += 0.5 * (r[idx[k]] - r[idx[k - 1]]) * (g[idx[k]] + g[idx[k - 1]]);
    }
    return s;
  };
  std::vector<std::size_t> all(r.size()), coarse;
  for (std::size_t i = 0; i < r.size(); ++i) all[i] = i;
  for (std::size_t i = 0; i < r.size(); i += 2) coarse.push_back(i);
  if (coarse.back() != r.size() - 1) coarse.push_back(r.size() - 1);
  return {trap(all), trap(coarse)};
}

inline void check_refinement(const TransformValue& t, double mass, double tol) {
  if (t.error_estimate > tol * std::max(std::abs(t.value), 1e-6 * mass)) {
    throw Error(ErrorKind::GridTooCoarse, "estimated quadrature error " + std::to_string(t.error_estimate) +
                                              " exceeds tolerance for value " + std::to_string(std::abs(t.value)));
  }
}

}  // namespace detail

/// Radial f: area(S^{n−1}) ∫ r^{n−1} f(r) φ(r) dr with φ the radial Bessel
/// function of λ² = b(ξ,ξ). Averaging a radial f over K makes the result the
/// same for every K. Error estimate: |T_h − T_2h| / 3.
inline std::vector<TransformValue> spherical_transform(const RadialProfile& f, const GroupHandle& h,
                                                       const std::vector<SpectralParam>& xis,
                                                       const EvalConfig& cfg) {
  f.validate();
  const int n = h.dim();
  const double area = sphere_area(n);
  std::vector<double> r;
  std::vector<Complex> weighted;
  double mass = 0;
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    if (f.grid[i] > f.support_radius) break;
    r.push_back(f.grid[i]);
    weighted.push_back(area * std::pow(f.grid[i], n - 1) * f.values[i]);
  }
  if (r.size() < 3) throw Error(ErrorKind::GridTooCoarse, "fewer than 3 radial nodes inside the support");
  for (std::size_t i = 1; i < r.size(); ++i) {
    mass += 0.5 * (r[i] - r[i - 1]) * (std::abs(weighted[i]) + std::abs(weighted[i - 1]));
  }
  std::vector<TransformValue> out;
  for (const auto& xi : xis) {
    require_same_dim(xi.size(), n, "xi");
    const Complex lambda = spectral_lambda(xi);
    std::vector<Complex> g(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) g[i] = weighted[i] * closed_form_spherical({n, lambda, r[i]});
    const auto [fine, coarse] = detail::trapezoid_pair(r, g);
    TransformValue t{fine, std::abs(fine - coarse) / 3.0};
    detail::check_refinement(t, mass, cfg.transform_tol);
    out.push_back(t);
  }
  return out;
}

/// General f: tensor trapezoid over the cube with φ_ξ^K(−x) from the
/// configured evaluator. Error estimate from the every-other-node subgrid.
inline std::vector<TransformValue> spherical_transform(const GridFunction& f, const GroupHandle& h,
                                                       const std::vector<SpectralParam>& xis,
                                                       const EvalConfig& cfg) {
  const int n = h.dim();
  const int q = f.points_per_axis;
  if (q < 5 || q % 2 == 0) throw Error(ErrorKind::InvalidArgument, "points_per_axis must be odd and >= 5");
  if (!(f.half_width > 0)) throw Error(ErrorKind::InvalidArgument, "half_width must be positive");
  const double total = std::pow(static_cast<double>(q), n);
  if (total > 5e7) throw Error(ErrorKind::InvalidArgument, "tensor grid too large");
  const double step = 2 * f.half_width / (q - 1);

  // Node list with fine and coarse tensor weights.
  std::vector<Vector> nodes;
  std::vector<double> wf, wc;
  std::vector<int> idx(static_cast<size_t>(n), 0);
  for (std::int64_t count = 0; count < static_cast<std::int64_t>(total); ++count) {
    Vector x(n);
    double a = 1, b = 1;
    for (int d = 0; d < n; ++d) {
      const int k = idx[static_cast<size_t>(d)];
      x(d) = -f.half_width + step * k;
      const bool edge = k == 0 || k == q - 1;
      a *= step * (edge ? 0.5 : 1.0);
      b *= k % 2 ? 0.0 : 2 * step * (edge ? 0.5 : 1.0);
    }
    nodes.push_back(std::move(x));
    wf.push_back(a);
    wc.push_back(b);
    for (int d = 0; d < n && ++idx[static_cast<size_t>(d)] == q; ++d) idx[static_cast<size_t>(d)] = 0;
  }
  std::vector<Complex> values(nodes.size());
  double mass = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    values[i] = f.f(nodes[i]);
    mass += wf[i] * std::abs(values[i]);
  }
  std::vector<TransformValue> out;
  for (const auto& xi : xis) {
    const SphericalFunction phi(h, xi, cfg);
    Complex fine = 0, coarse = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (values[i] == Complex(0, 0)) continue;
      const Complex v = values[i] * phi(-nodes[i]).value;
      fine += wf[i] * v;
      coarse += wc[i] * v;
    }
    TransformValue t{fine, std::abs(fine - coarse) / 3.0};
    detail::check_refinement(t, mass, cfg.transform_tol);
    out.push_back(t);
  }
  return out;
}

}  // namespace sphfn
