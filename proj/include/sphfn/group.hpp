#pragma once

// Compact subgroups K of O(n): descriptions, exact enumeration of finite
// groups, Haar sampling of the classical families, and real-orbit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "realify.hpp"
#include "types.hpp"

namespace sphfn {

enum class GroupKind {
  Orthogonal,         // O(n)
  SpecialOrthogonal,  // SO(n)
  Unitary,            // U(m) on R^{2m}
  SpecialUnitary,     // SU(m) on R^{2m}
  Symplectic,         // Sp(m) on R^{4m}
  SymplecticU1,       // Sp(m)·U(1) on R^{4m}
  SymplecticSp1,      // Sp(m)·Sp(1) on R^{4m}
  Torus,              // SO(2)^k acting blockwise on R^{2k}
  Finite,             // closure of a finite generator list
  BlockProduct,       // block-diagonal product of factors
  G2,                 // exceptional, n = 7
  Spin7,              // exceptional, n = 8
  Spin9,              // exceptional, n = 16
};

inline std::string_view to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::Orthogonal: return "orthogonal";
    case GroupKind::SpecialOrthogonal: return "special_orthogonal";
    case GroupKind::Unitary: return "unitary";
    case GroupKind::SpecialUnitary: return "special_unitary";
    case GroupKind::Symplectic: return "symplectic";
    case GroupKind::SymplecticU1: return "symplectic_u1";
    case GroupKind::SymplecticSp1: return "symplectic_sp1";
    case GroupKind::Torus: return "torus";
    case GroupKind::Finite: return "finite";
    case GroupKind::BlockProduct: return "block_product";
    case GroupKind::G2: return "g2";
    case GroupKind::Spin7: return "spin7";
    case GroupKind::Spin9: return "spin9";
  }
  return "unknown";
}

struct GroupSpec {
  GroupKind kind = GroupKind::Finite;
  int ambient_dim = 0;
  // n for O/SO, m for the unitary and symplectic families, block count for Torus.
  int param = 0;
  std::vector<Matrix> generators;
  std::vector<GroupSpec> factors;

  static GroupSpec orthogonal(int n) { return {GroupKind::Orthogonal, n, n, {}, {}}; }
  static GroupSpec special_orthogonal(int n) { return {GroupKind::SpecialOrthogonal, n, n, {}, {}}; }
  static GroupSpec unitary(int m) { return {GroupKind::Unitary, 2 * m, m, {}, {}}; }
  static GroupSpec special_unitary(int m) { return {GroupKind::SpecialUnitary, 2 * m, m, {}, {}}; }
  static GroupSpec symplectic(int m) { return {GroupKind::Symplectic, 4 * m, m, {}, {}}; }
  static GroupSpec symplectic_u1(int m) { return {GroupKind::SymplecticU1, 4 * m, m, {}, {}}; }
  static GroupSpec symplectic_sp1(int m) { return {GroupKind::SymplecticSp1, 4 * m, m, {}, {}}; }
  static GroupSpec torus(int blocks) { return {GroupKind::Torus, 2 * blocks, blocks, {}, {}}; }
  static GroupSpec g2() { return {GroupKind::G2, 7, 0, {}, {}}; }
  static GroupSpec spin7() { return {GroupKind::Spin7, 8, 0, {}, {}}; }
  static GroupSpec spin9() { return {GroupKind::Spin9, 16, 0, {}, {}}; }

  static GroupSpec finite(int n, std::vector<Matrix> gens) {
    return {GroupKind::Finite, n, 0, std::move(gens), {}};
  }
  static GroupSpec block_product(std::vector<GroupSpec> parts) {
    int n = 0;
    for (const auto& f : parts) n += f.ambient_dim;
    return {GroupKind::BlockProduct, n, 0, {}, std::move(parts)};
  }
};

// ---------------------------------------------------------------------------
// Standard generators

inline Matrix rotation2(double angle) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

/// Exact integer rotation by 90 degrees.
inline Matrix rot90() {
  Matrix r(2, 2);
  r << 0, -1, 1, 0;
  return r;
}

inline Matrix reflect_y() {
  Matrix r(2, 2);
  r << 1, 0, 0, -1;
  return r;
}

inline GroupSpec cyclic4() { return GroupSpec::finite(2, {rot90()}); }
inline GroupSpec dihedral8() { return GroupSpec::finite(2, {rot90(), reflect_y()}); }

// ---------------------------------------------------------------------------
// Exact rational closure

namespace detail {
__extension__ typedef __int128 int128;

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  friend bool operator==(const Rational&, const Rational&) = default;
};

struct Overflow {};

inline Rational make_rational(int128 num, int128 den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  int128 a = num < 0 ? -num : num;
  int128 b = den;
  while (b != 0) {
    const int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr int128 lim = static_cast<int128>(INT64_MAX);
  if (num > lim || num < -lim || den > lim) throw Overflow{};
  return {static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

inline Rational add(const Rational& x, const Rational& y) {
  return make_rational(static_cast<int128>(x.num) * y.den + static_cast<int128>(y.num) * x.den,
                       static_cast<int128>(x.den) * y.den);
}

inline Rational mul(const Rational& x, const Rational& y) {
  return make_rational(static_cast<int128>(x.num) * y.num, static_cast<int128>(x.den) * y.den);
}

/// Recovers p/q (q ≤ 1024) whose double value matches x to rounding error.
inline std::optional<Rational> recognize_rational(double x) {
  if (!std::isfinite(x) || std::abs(x) > 1e12) return std::nullopt;
  for (std::int64_t q = 1; q <= 1024; ++q) {
    const double p = std::round(x * static_cast<double>(q));
    if (std::abs(p / static_cast<double>(q) - x) <= 2e-16 * std::max(1.0, std::abs(x))) {
      return make_rational(static_cast<int128>(p), q);
    }
  }
  return std::nullopt;
}

struct RationalMatrix {
  int n = 0;
  std::vector<Rational> e;

  Rational& operator()(int i, int j) { return e[static_cast<size_t>(i) * n + j]; }
  const Rational& operator()(int i, int j) const { return e[static_cast<size_t>(i) * n + j]; }

  friend bool operator==(const RationalMatrix&, const RationalMatrix&) = default;

  static RationalMatrix identity(int n) {
    RationalMatrix r{n, std::vector<Rational>(static_cast<size_t>(n) * n)};
    for (int i = 0; i < n; ++i) r(i, i) = {1, 1};
    return r;
  }

  Matrix to_double() const {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m(i, j) = static_cast<double>((*this)(i, j).num) / static_cast<double>((*this)(i, j).den);
    return m;
  }
};

inline RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
  RationalMatrix c{a.n, std::vector<Rational>(a.e.size())};
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) {
      Rational s{0, 1};
      for (int k = 0; k < a.n; ++k) {
        if (a(i, k).num == 0 || b(k, j).num == 0) continue;
        s = add(s, mul(a(i, k), b(k, j)));
      }
      c(i, j) = s;
    }
  return c;
}

inline std::optional<RationalMatrix> to_rational(const Matrix& m) {
  RationalMatrix r{static_cast<int>(m.rows()), std::vector<Rational>(static_cast<size_t>(m.size()))};
  for (int i = 0; i < r.n; ++i)
    for (int j = 0; j < r.n; ++j) {
      auto q = recognize_rational(m(i, j));
      if (!q) return std::nullopt;
      r(i, j) = *q;
    }
  return r;
}

inline bool exactly_orthogonal(const RationalMatrix& m) {
  RationalMatrix t{m.n, std::vector<Rational>(m.e.size())};
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) t(i, j) = m(j, i);
  return t * m == RationalMatrix::identity(m.n);
}

struct RationalMatrixHash {
  size_t operator()(const RationalMatrix& m) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& q : m.e) {
      h = (h ^ static_cast<std::uint64_t>(q.num)) * 1099511628211ULL;
      h = (h ^ static_cast<std::uint64_t>(q.den)) * 1099511628211ULL;
    }
    return static_cast<size_t>(h);
  }
};

inline std::vector<Matrix> rational_closure(const std::vector<RationalMatrix>& gens, int n,
                                             std::size_t cap) {
  std::unordered_map<RationalMatrix, std::size_t, RationalMatrixHash> seen;
  std::vector<RationalMatrix> elems{RationalMatrix::identity(n)};
  seen.emplace(elems.front(), 0);
  try {
    for (std::size_t head = 0; head < elems.size(); ++head) {
      for (const auto& g : gens) {
        RationalMatrix p = g * elems[head];
        if (seen.count(p)) continue;
        if (elems.size() >= cap) {
          throw Error(ErrorKind::GroupTooLarge,
                      "closure exceeds " + std::to_string(cap) + " elements");
        }
        seen.emplace(p, elems.size());
        elems.push_back(std::move(p));
      }
    }
  } catch (const Overflow&) {
    // Denominators only grow without bound when some generator has infinite order.
    throw Error(ErrorKind::GroupTooLarge, "rational closure does not terminate (infinite group)");
  }
  std::vector<Matrix> out;
  out.reserve(elems.size());
  for (const auto& e : elems) out.push_back(e.to_double());
  return out;
}

/// Floating closure; two matrices are the same element when their entrywise
/// max difference is at most `tol`.
inline std::vector<Matrix> float_closure(const std::vector<Matrix>& gens, int n, std::size_t cap,
                                         double tol) {
  constexpr double kGrid = 1e6;
  using Key = std::vector<std::int64_t>;
  struct KeyHash {
    size_t operator()(const Key& k) const {
      std::uint64_t h = 1469598103934665603ULL;
      for (auto v : k) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ULL;
      return static_cast<size_t>(h);
    }
  };
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets;
  std::vector<Matrix> elems{Matrix::Identity(n, n)};

  auto key_of = [&](const Matrix& m) {
    Key k(static_cast<size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.size(); ++i) k[static_cast<size_t>(i)] = std::llround(m(i) * kGrid);
    return k;
  };
  auto find = [&](const Matrix& m) -> bool {
    // Entries within tol of a rounding boundary may land in a neighbouring
    // bucket; probe those alternatives too.
    Key base = key_of(m);
    std::vector<Eigen::Index> ambiguous;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double s = m(i) * kGrid;
      const double frac = s - std::floor(s);
      if (std::abs(frac - 0.5) <= tol * kGrid * 2 && ambiguous.size() < 12) ambiguous.push_back(i);
    }
    const std::size_t combos = std::size_t{1} << ambiguous.size();
    for (std::size_t mask = 0; mask < combos; ++mask) {
      Key k = base;
      for (std::size_t b = 0; b < ambiguous.size(); ++b) {
        if (!(mask & (std::size_t{1} << b))) continue;
        const Eigen::Index i = ambiguous[b];
        const double s = m(i) * kGrid;
        k[static_cast<size_t>(i)] = (std::llround(s) == static_cast<std::int64_t>(std::floor(s)))
                                        ? static_cast<std::int64_t>(std::floor(s)) + 1
                                        : static_cast<std::int64_t>(std::floor(s));
      }
      auto it = buckets.find(k);
      if (it == buckets.end()) continue;
      for (std::size_t idx : it->second) {
        if ((elems[idx] - m).cwiseAbs().maxCoeff() <= tol) return true;
      }
    }
    return false;
  };

  buckets[key_of(elems.front())].push_back(0);
  for (std::size_t head = 0; head < elems.size(); ++head) {
    for (const auto& g : gens) {
      Matrix p = g * elems[head];
      if (find(p)) continue;
      if (elems.size() >= cap) {
        throw Error(ErrorKind::GroupTooLarge, "closure exceeds " + std::to_string(cap) + " elements");
      }
      buckets[key_of(p)].push_back(elems.size());
      elems.push_back(std::move(p));
    }
  }
  return elems;
}

inline Matrix block_diag(const std::vector<Matrix>& blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) n += b.rows();
  Matrix m = Matrix::Zero(n, n);
  Eigen::Index off = 0;
  for (const auto& b : blocks) {
    m.block(off, off, b.rows(), b.cols()) = b;
    off += b.rows();
  }
  return m;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Handles

enum class SamplerId {
  None,
  FiniteUniform,
  OrthogonalQR,
  SpecialOrthogonalQR,
  UnitaryQR,
  SpecialUnitaryQR,
  SymplecticGramSchmidt,
  SymplecticU1,
  SymplecticSp1,
  TorusAngles,
  BlockProduct,
};

struct BuildOptions {
  std::size_t max_order = 100000;
  double dedup_tol = 1e-9;
  double orthogonality_tol = 1e-12;
};

class GroupHandle;
GroupHandle build_group(const GroupSpec& spec, const BuildOptions& opts = {});

/// Immutable, cheaply copyable handle to a constructed group. The only
/// mutable state is a keyed cache (e.g. invariant bases) behind a mutex.
class GroupHandle {
 public:
  const GroupSpec& spec() const { return state_->spec; }
  int dim() const { return state_->spec.ambient_dim; }
  bool is_finite() const { return state_->elements.has_value(); }
  const std::vector<Matrix>& elements() const {
    if (!state_->elements) throw Error(ErrorKind::NotFinite, "group has no element list");
    return *state_->elements;
  }
  std::size_t order() const { return is_finite() ? state_->elements->size() : 0; }
  SamplerId sampler() const { return state_->sampler; }
  bool has_sampler() const { return state_->sampler != SamplerId::None; }
  bool is_sphere_transitive() const { return state_->sphere_transitive; }
  bool exact_closure() const { return state_->exact_closure; }
  /// Number of independent SO(2) blocks when K is evaluated by angular
  /// quadrature (SO(2), O(2), U(1), tori); 0 otherwise.
  int angular_blocks() const { return state_->angular_blocks; }
  /// True for O(2): the angular rule also averages over the reflection coset.
  bool angular_reflection() const { return state_->angular_reflection; }
  const std::vector<GroupHandle>& factors() const { return state_->factors; }
  bool is_block_product() const { return state_->spec.kind == GroupKind::BlockProduct; }

  /// The n = 1 group {±1}; its spherical functions are cos(ξx).
  bool is_sign_group() const {
    return dim() == 1 && is_finite() && state_->elements->size() == 2;
  }

  /// Returns the cached value for `key`, computing it under the lock on first use.
  template <typename T>
  std::shared_ptr<const T> cached(const std::string& key, const std::function<T()>& make) const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    auto it = cache_->entries.find(key);
    if (it != cache_->entries.end()) return std::static_pointer_cast<const T>(it->second);
    auto value = std::make_shared<const T>(make());
    cache_->entries.emplace(key, value);
    return value;
  }

 private:
  struct State {
    GroupSpec spec;
    std::optional<std::vector<Matrix>> elements;
    SamplerId sampler = SamplerId::None;
    bool sphere_transitive = false;
    bool exact_closure = false;
    int angular_blocks = 0;
    bool angular_reflection = false;
    std::vector<GroupHandle> factors;
  };
  struct Cache {
    std::mutex mu;
    std::map<std::string, std::shared_ptr<const void>> entries;
  };

  explicit GroupHandle(State s)
      : state_(std::make_shared<const State>(std::move(s))), cache_(std::make_shared<Cache>()) {}

  std::shared_ptr<const State> state_;
  std::shared_ptr<Cache> cache_;

  friend GroupHandle build_group(const GroupSpec& spec, const BuildOptions& opts);
};

namespace detail {

inline void check_generators(const GroupSpec& spec, const BuildOptions& opts,
                             std::vector<RationalMatrix>* exact) {
  bool all_rational = true;
  for (std::size_t g = 0; g < spec.generators.size(); ++g) {
    const Matrix& m = spec.generators[g];
    if (m.rows() != spec.ambient_dim || m.cols() != spec.ambient_dim) {
      throw Error(ErrorKind::DimensionMismatch,
                  "generator " + std::to_string(g) + " is not " + std::to_string(spec.ambient_dim) +
                      "x" + std::to_string(spec.ambient_dim));
    }
    if (all_rational) {
      try {
        if (auto r = to_rational(m); r && exactly_orthogonal(*r)) {
          exact->push_back(std::move(*r));
          continue;
        }
      } catch (const Overflow&) {
      }
      all_rational = false;
    }
  }
  if (!all_rational) exact->clear();
  for (std::size_t g = 0; g < spec.generators.size(); ++g) {
    const Matrix& m = spec.generators[g];
    const double defect =
        (m.transpose() * m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
    if (!(defect <= opts.orthogonality_tol)) {
      throw Error(ErrorKind::NonOrthogonalGenerator,
                  "generator " + std::to_string(g) + " has |M^T M - I| = " + std::to_string(defect));
    }
  }
}

}  // namespace detail

/// Builds a group handle: finite specs are enumerated by closure (exact
/// rational arithmetic when every generator entry is rational), continuous
/// specs get a Haar sampler.
inline GroupHandle build_group(const GroupSpec& spec, const BuildOptions& opts) {
  using State = GroupHandle::State;
  State s;
  s.spec = spec;
  const int n = spec.ambient_dim;
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, std::string(to_string(spec.kind)) + ": " + what);
  };
  auto finite_from = [&](std::vector<Matrix> elems) {
    s.elements = std::move(elems);
    s.sampler = SamplerId::FiniteUniform;
    s.exact_closure = true;
  };

  switch (spec.kind) {
    case GroupKind::Orthogonal:
    case GroupKind::SpecialOrthogonal: {
      require(n >= 1 && spec.param == n, "dimension must be positive");
      const bool special = spec.kind == GroupKind::SpecialOrthogonal;
      if (n == 1) {
        std::vector<Matrix> e{Matrix::Identity(1, 1)};
        if (!special) e.push_back(-Matrix::Identity(1, 1));
        finite_from(std::move(e));
        break;
      }
      s.sampler = special ? SamplerId::SpecialOrthogonalQR : SamplerId::OrthogonalQR;
      s.sphere_transitive = true;
      if (n == 2) {
        s.angular_blocks = 1;
        s.angular_reflection = !special;
      }
      break;
    }
    case GroupKind::Unitary:
    case GroupKind::SpecialUnitary: {
      require(spec.param >= 1 && n == 2 * spec.param, "requires m >= 1 and dim = 2m");
      const bool special = spec.kind == GroupKind::SpecialUnitary;
      if (special && spec.param == 1) {
        finite_from({Matrix::Identity(2, 2)});
        break;
      }
      s.sampler = special ? SamplerId::SpecialUnitaryQR : SamplerId::UnitaryQR;
      s.sphere_transitive = true;
      if (!special && spec.param == 1) s.angular_blocks = 1;
      break;
    }
    case GroupKind::Symplectic:
    case GroupKind::SymplecticU1:
    case GroupKind::SymplecticSp1:
      require(spec.param >= 1 && n == 4 * spec.param, "requires m >= 1 and dim = 4m");
      s.sampler = spec.kind == GroupKind::Symplectic    ? SamplerId::SymplecticGramSchmidt
                  : spec.kind == GroupKind::SymplecticU1 ? SamplerId::SymplecticU1
                                                         : SamplerId::SymplecticSp1;
      s.sphere_transitive = true;
      break;
    case GroupKind::Torus:
      require(spec.param >= 1 && n == 2 * spec.param, "requires k >= 1 blocks and dim = 2k");
      s.sampler = SamplerId::TorusAngles;
      s.angular_blocks = spec.param;
      s.sphere_transitive = spec.param == 1;
      break;
    case GroupKind::G2:
      require(n == 7, "G2 acts on R^7");
      s.sphere_transitive = true;
      break;
    case GroupKind::Spin7:
      require(n == 8, "Spin(7) acts on R^8");
      s.sphere_transitive = true;
      break;
    case GroupKind::Spin9:
      require(n == 16, "Spin(9) acts on R^16");
      s.sphere_transitive = true;
      break;
    case GroupKind::Finite: {
      require(n >= 1, "dimension must be positive");
      std::vector<detail::RationalMatrix> exact;
      detail::check_generators(spec, opts, &exact);
      if (!exact.empty() || spec.generators.empty()) {
        s.elements = detail::rational_closure(exact, n, opts.max_order);
        s.exact_closure = true;
      } else {
        s.elements = detail::float_closure(spec.generators, n, opts.max_order, opts.dedup_tol);
      }
      s.sampler = SamplerId::FiniteUniform;
      break;
    }
    case GroupKind::BlockProduct: {
      require(!spec.factors.empty(), "needs at least one factor");
      int total = 0;
      bool all_finite = true;
      std::size_t order = 1;
      for (const auto& f : spec.factors) {
        s.factors.push_back(build_group(f, opts));
        total += f.ambient_dim;
        all_finite = all_finite && s.factors.back().is_finite();
        if (all_finite) order *= s.factors.back().order();
      }
      if (total != n) {
        throw Error(ErrorKind::DimensionMismatch, "block product dim " + std::to_string(n) +
                                                      " != sum of factor dims " + std::to_string(total));
      }
      bool samplable = true;
      for (const auto& f : s.factors) samplable = samplable && f.has_sampler();
      s.sampler = samplable ? SamplerId::BlockProduct : SamplerId::None;
      if (s.factors.size() == 1) s.sphere_transitive = s.factors.front().is_sphere_transitive();
      if (all_finite) {
        if (order > opts.max_order) {
          throw Error(ErrorKind::GroupTooLarge, "block product order " + std::to_string(order) +
                                                    " exceeds " + std::to_string(opts.max_order));
        }
        std::vector<Matrix> elems{Matrix::Identity(n, n)};
        Eigen::Index off = 0;
        for (const auto& f : s.factors) {
          std::vector<Matrix> next;
          next.reserve(elems.size() * f.order());
          for (const auto& e : elems) {
            for (const auto& k : f.elements()) {
              Matrix p = e;
              p.block(off, off, f.dim(), f.dim()) = k;
              next.push_back(std::move(p));
            }
          }
          elems = std::move(next);
          off += f.dim();
        }
        s.elements = std::move(elems);
        s.exact_closure = std::all_of(s.factors.begin(), s.factors.end(),
                                      [](const GroupHandle& f) { return f.exact_closure(); });
      }
      break;
    }
  }
  return GroupHandle(std::move(s));
}

// ---------------------------------------------------------------------------
// Haar sampling

namespace detail {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x5eedu};
  return Rng(seq);
}

/// Gaussian matrix → QR → columns scaled by sign(R_ii): Haar on O(n).
inline Matrix haar_orthogonal_qr(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

inline Matrix haar_special_orthogonal(int n, Rng& rng) {
  Matrix q = haar_orthogonal_qr(n, rng);
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

inline Matrix haar_orthogonal(int n, Rng& rng) {
  Matrix q = haar_special_orthogonal(n, rng);
  std::bernoulli_distribution coin(0.5);
  if (coin(rng)) q.row(0) *= -1.0;  // left-multiply by diag(-1, 1, ..., 1)
  return q;
}

inline CMatrix haar_unitary(int m, Rng& rng, bool special) {
  std::normal_distribution<double> normal;
  CMatrix g(m, m);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = Complex(normal(rng), normal(rng));
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (int j = 0; j < m; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0) q.col(j) *= r(j, j) / mag;
  }
  if (special) {
    const Complex det = q.determinant();
    q *= std::exp(Complex(0.0, -std::arg(det) / m));
  }
  return q;
}

inline Quaternion random_unit_quaternion(Rng& rng) {
  std::normal_distribution<double> normal;
  Quaternion q{normal(rng), normal(rng), normal(rng), normal(rng)};
  return q * (1.0 / std::sqrt(q.norm2()));
}

/// Gram–Schmidt on a quaternionic Gaussian matrix (columns are vectors in the
/// right H-module H^m): Haar on Sp(m).
inline QuaternionMatrix haar_symplectic(int m, Rng& rng) {
  std::normal_distribution<double> normal;
  QuaternionMatrix a(m);
  for (auto& q : a.entries) q = {normal(rng), normal(rng), normal(rng), normal(rng)};
  for (int j = 0; j < m; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < j; ++k) {
        Quaternion ip{};
        for (int i = 0; i < m; ++i) ip = ip + a(i, k).conj() * a(i, j);
        for (int i = 0; i < m; ++i) a(i, j) = a(i, j) - a(i, k) * ip;
      }
    }
    double norm2 = 0;
    for (int i = 0; i < m; ++i) norm2 += a(i, j).norm2();
    const double inv = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < m; ++i) a(i, j) = a(i, j) * inv;
  }
  return a;
}

inline Matrix draw(const GroupHandle& h, Rng& rng) {
  const int n = h.dim();
  const int m = h.spec().param;
  switch (h.sampler()) {
    case SamplerId::FiniteUniform: {
      std::uniform_int_distribution<std::size_t> pick(0, h.order() - 1);
      return h.elements()[pick(rng)];
    }
    case SamplerId::OrthogonalQR: return haar_orthogonal(n, rng);
    case SamplerId::SpecialOrthogonalQR: return haar_special_orthogonal(n, rng);
    case SamplerId::UnitaryQR: return realify(haar_unitary(m, rng, false), 1e-10);
    case SamplerId::SpecialUnitaryQR: return realify(haar_unitary(m, rng, true), 1e-10);
    case SamplerId::SymplecticGramSchmidt: return realify_quaternionic(haar_symplectic(m, rng));
    case SamplerId::SymplecticU1: {
      const Matrix a = realify_quaternionic(haar_symplectic(m, rng));
      std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
      const double t = angle(rng);
      return a * realify_right_scalar({std::cos(t), std::sin(t), 0, 0}, m);
    }
    case SamplerId::SymplecticSp1: {
      const Matrix a = realify_quaternionic(haar_symplectic(m, rng));
      return a * realify_right_scalar(random_unit_quaternion(rng), m);
    }
    case SamplerId::TorusAngles: {
      std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
      std::vector<Matrix> blocks;
      for (int b = 0; b < h.spec().param; ++b) blocks.push_back(rotation2(angle(rng)));
      return block_diag(blocks);
    }
    case SamplerId::BlockProduct: {
      std::vector<Matrix> blocks;
      for (const auto& f : h.factors()) blocks.push_back(draw(f, rng));
      return block_diag(blocks);
    }
    case SamplerId::None: break;
  }
  throw Error(ErrorKind::UnsupportedSampler,
              "no Haar sampler for " + std::string(to_string(h.spec().kind)));
}

}  // namespace detail

/// `count` i.i.d. Haar-distributed elements of K; deterministic in `seed`.
inline std::vector<Matrix> haar_samples(const GroupHandle& h, std::uint64_t seed, std::int64_t count) {
  if (count <= 0) throw Error(ErrorKind::InvalidArgument, "sample count must be positive");
  if (!h.has_sampler()) {
    throw Error(ErrorKind::UnsupportedSampler,
                "no Haar sampler for " + std::string(to_string(h.spec().kind)));
  }
  auto rng = detail::make_rng(seed);
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) out.push_back(detail::draw(h, rng));
  return out;
}

// ---------------------------------------------------------------------------
// Real orbits

/// Decides ξ' ∈ K(ξ) for real vectors. Exact for finite K; norm comparison
/// for sphere-transitive K; per-block norms for tori and block products.
inline bool orbit_equal_real(const GroupHandle& h, const Vector& xi, const Vector& xi2, double tol) {
  require_same_dim(xi.size(), h.dim(), "xi");
  require_same_dim(xi2.size(), h.dim(), "xi2");
  if (h.is_finite()) {
    for (const auto& k : h.elements()) {
      if ((k * xi - xi2).cwiseAbs().maxCoeff() <= tol) return true;
    }
    return false;
  }
  if (h.is_sphere_transitive()) return std::abs(xi.norm() - xi2.norm()) <= tol;
  if (h.spec().kind == GroupKind::Torus) {
    for (int b = 0; b < h.angular_blocks(); ++b) {
      if (std::abs(xi.segment(2 * b, 2).norm() - xi2.segment(2 * b, 2).norm()) > tol) return false;
    }
    return true;
  }
  if (h.is_block_product()) {
    Eigen::Index off = 0;
    for (const auto& f : h.factors()) {
      if (!orbit_equal_real(f, xi.segment(off, f.dim()), xi2.segment(off, f.dim()), tol)) return false;
      off += f.dim();
    }
    return true;
  }
  throw Error(ErrorKind::OrbitTestUnsupported,
              "no exact orbit criterion for " + std::string(to_string(h.spec().kind)) +
                  "; compare fingerprints instead");
}

}  // namespace sphfn
