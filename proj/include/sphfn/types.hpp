#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace sphfn {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

enum class ErrorKind {
  NonOrthogonalGenerator,
  GroupTooLarge,
  UnsupportedSampler,
  NonUnitaryInput,
  OrbitTestUnsupported,
  DimensionMismatch,
  ProbeAtZero,
  DegenerateBasis,
  SeriesNotConverged,
  QuadratureNotConverged,
  OverflowRisk,
  NotFinite,
  DegreeCapExceeded,
  FingerprintUnsupported,
  BasisMismatch,
  GridTooCoarse,
  ClosedFormUnavailable,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonOrthogonalGenerator: return "NonOrthogonalGenerator";
    case ErrorKind::GroupTooLarge: return "GroupTooLarge";
    case ErrorKind::UnsupportedSampler: return "UnsupportedSampler";
    case ErrorKind::NonUnitaryInput: return "NonUnitaryInput";
    case ErrorKind::OrbitTestUnsupported: return "OrbitTestUnsupported";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ProbeAtZero: return "ProbeAtZero";
    case ErrorKind::DegenerateBasis: return "DegenerateBasis";
    case ErrorKind::SeriesNotConverged: return "SeriesNotConverged";
    case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorKind::OverflowRisk: return "OverflowRisk";
    case ErrorKind::NotFinite: return "NotFinite";
    case ErrorKind::DegreeCapExceeded: return "DegreeCapExceeded";
    case ErrorKind::FingerprintUnsupported: return "FingerprintUnsupported";
    case ErrorKind::BasisMismatch: return "BasisMismatch";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::ClosedFormUnavailable: return "ClosedFormUnavailable";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every library failure is reported through this exception; `kind()` is the
/// machine-readable tag.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + " (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

/// How `eval_spherical` should integrate over K.
enum class MethodChoice {
  Auto,        // finite sum, torus quadrature, or Monte Carlo, whichever applies
  MonteCarlo,  // force Haar sampling
  ClosedForm,  // Bessel closed form; sphere-transitive groups only
};

enum class EvalMethod { MonteCarlo, FiniteSum, TorusQuadrature, ClosedForm };

inline std::string_view to_string(EvalMethod m) {
  switch (m) {
    case EvalMethod::MonteCarlo: return "MonteCarlo";
    case EvalMethod::FiniteSum: return "FiniteSum";
    case EvalMethod::TorusQuadrature: return "TorusQuadrature";
    case EvalMethod::ClosedForm: return "ClosedForm";
  }
  return "Unknown";
}

struct EvalConfig {
  std::int64_t samples = 10000;
  std::uint64_t seed = 0;
  int quadrature_nodes = 256;
  double tol = 1e-9;
  // Relative tolerance for the spherical transform's grid-refinement check.
  double transform_tol = 1e-3;
  MethodChoice method = MethodChoice::Auto;
};

struct EvalResult {
  Complex value{1.0, 0.0};
  double std_error = 0.0;  // Monte Carlo standard error; 0 for exact methods
  EvalMethod method = EvalMethod::FiniteSum;
};

/// SplitMix64 finalizer; used to derive decorrelated per-point seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the `index`-th probe of a batch: seed XOR index, then mixed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix_seed(seed ^ index);
}

}  // namespace sphfn
