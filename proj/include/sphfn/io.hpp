#pragma once

// JSON and CSV conversions for group specs, configs, fingerprints and reports.

#include <json.hpp>

#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "group.hpp"
#include "invariants.hpp"
#include "posdef.hpp"
#include "types.hpp"

namespace sphfn {

using Json = nlohmann::json;

/// Malformed or inconsistent configuration; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Shortest round-trippable decimal form (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace io {

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + "." + key, "missing");
  return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

/// A complex number is a JSON number or a [re, im] pair.
inline Complex complex_from(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError(path, "expected a number or [re, im]");
}

inline Json complex_to(Complex z) { return Json::array({z.real(), z.imag()}); }

inline CVector cvector_from(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = complex_from(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline Vector vector_from(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline Json cvector_to(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to(v(i)));
  return out;
}

inline Json vector_to(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Matrix matrix_from(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Matrix m(rows, rows);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string row_path = path + "[" + std::to_string(i) + "]";
    const Vector row = vector_from(j[i], row_path);
    if (row.size() != rows) throw ConfigError(row_path, "matrix must be square");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

inline Json matrix_to(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vector_to(m.row(i).transpose()));
  return out;
}

}  // namespace io

inline GroupKind group_kind_from_string(const std::string& s, const std::string& path) {
  static const std::map<std::string, GroupKind> names = {
      {"orthogonal", GroupKind::Orthogonal},       {"O", GroupKind::Orthogonal},
      {"special_orthogonal", GroupKind::SpecialOrthogonal}, {"SO", GroupKind::SpecialOrthogonal},
      {"unitary", GroupKind::Unitary},             {"U", GroupKind::Unitary},
      {"special_unitary", GroupKind::SpecialUnitary}, {"SU", GroupKind::SpecialUnitary},
      {"symplectic", GroupKind::Symplectic},       {"Sp", GroupKind::Symplectic},
      {"symplectic_u1", GroupKind::SymplecticU1},  {"SpU1", GroupKind::SymplecticU1},
      {"symplectic_sp1", GroupKind::SymplecticSp1}, {"SpSp1", GroupKind::SymplecticSp1},
      {"torus", GroupKind::Torus},                 {"T", GroupKind::Torus},
      {"finite", GroupKind::Finite},
      {"block_product", GroupKind::BlockProduct},  {"product", GroupKind::BlockProduct},
      {"g2", GroupKind::G2},                       {"G2", GroupKind::G2},
      {"spin7", GroupKind::Spin7},                 {"Spin7", GroupKind::Spin7},
      {"spin9", GroupKind::Spin9},                 {"Spin9", GroupKind::Spin9},
  };
  const auto it = names.find(s);
  if (it == names.end()) throw ConfigError(path, "unknown group kind '" + s + "'");
  return it->second;
}

/// {"kind": ..., "dim": n} for O/SO, {"m": m} (or "dim") for the unitary and
/// symplectic families, {"blocks": k} for tori, {"generators": [...]} for
/// finite groups and {"factors": [...]} for block products.
inline GroupSpec group_spec_from_json(const Json& j, const std::string& path = "group") {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const Json& kind_json = io::require(j, "kind", path);
  if (!kind_json.is_string()) throw ConfigError(path + ".kind", "expected a string");
  const GroupKind kind = group_kind_from_string(kind_json.get<std::string>(), path + ".kind");
  auto positive = [&](const std::string& key) {
    const int v = io::integer(io::require(j, key, path), path + "." + key);
    if (v < 1) throw ConfigError(path + "." + key, "must be positive");
    return v;
  };
  auto family_param = [&](int real_per_unit) {
    if (j.contains("m")) return positive("m");
    if (j.contains("dim")) {
      const int n = positive("dim");
      if (n % real_per_unit != 0) {
        throw ConfigError(path + ".dim", "must be a multiple of " + std::to_string(real_per_unit));
      }
      return n / real_per_unit;
    }
    throw ConfigError(path + ".m", "missing");
  };
  auto fixed_dim = [&](int n) {
    if (j.contains("dim") && io::integer(j.at("dim"), path + ".dim") != n) {
      throw ConfigError(path + ".dim", "must be " + std::to_string(n));
    }
  };
  switch (kind) {
    case GroupKind::Orthogonal: return GroupSpec::orthogonal(positive("dim"));
    case GroupKind::SpecialOrthogonal: return GroupSpec::special_orthogonal(positive("dim"));
    case GroupKind::Unitary: return GroupSpec::unitary(family_param(2));
    case GroupKind::SpecialUnitary: return GroupSpec::special_unitary(family_param(2));
    case GroupKind::Symplectic: return GroupSpec::symplectic(family_param(4));
    case GroupKind::SymplecticU1: return GroupSpec::symplectic_u1(family_param(4));
    case GroupKind::SymplecticSp1: return GroupSpec::symplectic_sp1(family_param(4));
    case GroupKind::Torus: {
      if (j.contains("blocks")) return GroupSpec::torus(positive("blocks"));
      return GroupSpec::torus(family_param(2));
    }
    case GroupKind::G2: fixed_dim(7); return GroupSpec::g2();
    case GroupKind::Spin7: fixed_dim(8); return GroupSpec::spin7();
    case GroupKind::Spin9: fixed_dim(16); return GroupSpec::spin9();
    case GroupKind::Finite: {
      const Json& gens = io::require(j, "generators", path);
      if (!gens.is_array()) throw ConfigError(path + ".generators", "expected an array of matrices");
      std::vector<Matrix> mats;
      for (std::size_t i = 0; i < gens.size(); ++i) {
        mats.push_back(io::matrix_from(gens[i], path + ".generators[" + std::to_string(i) + "]"));
      }
      int n = j.contains("dim") ? positive("dim") : (mats.empty() ? 0 : static_cast<int>(mats[0].rows()));
      if (n < 1) throw ConfigError(path + ".dim", "missing (no generators to infer it from)");
      for (std::size_t i = 0; i < mats.size(); ++i) {
        if (mats[i].rows() != n) {
          throw ConfigError(path + ".generators[" + std::to_string(i) + "]",
                            "expected " + std::to_string(n) + "x" + std::to_string(n));
        }
      }
      return GroupSpec::finite(n, std::move(mats));
    }
    case GroupKind::BlockProduct: {
      const Json& fs = io::require(j, "factors", path);
      if (!fs.is_array() || fs.empty()) throw ConfigError(path + ".factors", "expected a non-empty array");
      std::vector<GroupSpec> parts;
      for (std::size_t i = 0; i < fs.size(); ++i) {
        parts.push_back(group_spec_from_json(fs[i], path + ".factors[" + std::to_string(i) + "]"));
      }
      return GroupSpec::block_product(std::move(parts));
    }
  }
  throw ConfigError(path + ".kind", "unsupported");
}

inline Json to_json(const GroupSpec& g) {
  Json j;
  j["kind"] = std::string(to_string(g.kind));
  j["dim"] = g.ambient_dim;
  switch (g.kind) {
    case GroupKind::Unitary:
    case GroupKind::SpecialUnitary:
    case GroupKind::Symplectic:
    case GroupKind::SymplecticU1:
    case GroupKind::SymplecticSp1: j["m"] = g.param; break;
    case GroupKind::Torus: j["blocks"] = g.param; break;
    case GroupKind::Finite: {
      j["generators"] = Json::array();
      for (const auto& m : g.generators) j["generators"].push_back(io::matrix_to(m));
      break;
    }
    case GroupKind::BlockProduct: {
      j["factors"] = Json::array();
      for (const auto& f : g.factors) j["factors"].push_back(to_json(f));
      break;
    }
    default: break;
  }
  return j;
}

inline MethodChoice method_choice_from_string(const std::string& s, const std::string& path) {
  if (s == "auto") return MethodChoice::Auto;
  if (s == "monte_carlo") return MethodChoice::MonteCarlo;
  if (s == "closed_form") return MethodChoice::ClosedForm;
  throw ConfigError(path, "expected auto, monte_carlo or closed_form");
}

inline std::string_view to_string(MethodChoice m) {
  switch (m) {
    case MethodChoice::Auto: return "auto";
    case MethodChoice::MonteCarlo: return "monte_carlo";
    case MethodChoice::ClosedForm: return "closed_form";
  }
  return "auto";
}

/// Reads {"samples", "seed", "quadrature_nodes", "tol", "transform_tol",
/// "method"} from the top level of `j`; absent keys keep their defaults.
inline EvalConfig eval_config_from_json(const Json& j) {
  EvalConfig c;
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  if (j.contains("samples")) {
    if (!j["samples"].is_number_integer() || j["samples"].get<std::int64_t>() < 1) {
      throw ConfigError("samples", "expected a positive integer");
    }
    c.samples = j["samples"].get<std::int64_t>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("quadrature_nodes")) {
    c.quadrature_nodes = io::integer(j["quadrature_nodes"], "quadrature_nodes");
    if (c.quadrature_nodes < 4) throw ConfigError("quadrature_nodes", "must be at least 4");
  }
  if (j.contains("tol")) {
    c.tol = io::number(j["tol"], "tol");
    if (!(c.tol > 0)) throw ConfigError("tol", "must be positive");
  }
  if (j.contains("transform_tol")) {
    c.transform_tol = io::number(j["transform_tol"], "transform_tol");
    if (!(c.transform_tol > 0)) throw ConfigError("transform_tol", "must be positive");
  }
  if (j.contains("method")) {
    if (!j["method"].is_string()) throw ConfigError("method", "expected a string");
    c.method = method_choice_from_string(j["method"].get<std::string>(), "method");
  }
  return c;
}

inline Json to_json(const EvalConfig& c) {
  return {{"samples", c.samples},   {"seed", c.seed},
          {"quadrature_nodes", c.quadrature_nodes}, {"tol", c.tol},
          {"transform_tol", c.transform_tol},       {"method", std::string(to_string(c.method))}};
}

inline Json to_json(const QuotientPoint& q) {
  Json values = Json::array();
  for (const auto& v : q.values) values.push_back(io::complex_to(v));
  return {{"basis_id", q.basis_id}, {"values", values}};
}

inline QuotientPoint quotient_point_from_json(const Json& j) {
  QuotientPoint q;
  const Json& id = io::require(j, "basis_id", "fingerprint");
  if (!id.is_string()) throw ConfigError("fingerprint.basis_id", "expected a string");
  q.basis_id = id.get<std::string>();
  const Json& values = io::require(j, "values", "fingerprint");
  if (!values.is_array()) throw ConfigError("fingerprint.values", "expected an array");
  for (std::size_t i = 0; i < values.size(); ++i) {
    q.values.push_back(io::complex_from(values[i], "fingerprint.values[" + std::to_string(i) + "]"));
  }
  return q;
}

inline Json to_json(const GramReport& r) {
  Json re = Json::array(), im = Json::array(), motions = Json::array();
  for (Eigen::Index i = 0; i < r.matrix.rows(); ++i) {
    Json rr = Json::array(), ri = Json::array();
    for (Eigen::Index k = 0; k < r.matrix.cols(); ++k) {
      rr.push_back(r.matrix(i, k).real());
      ri.push_back(r.matrix(i, k).imag());
    }
    re.push_back(rr);
    im.push_back(ri);
  }
  for (const auto& g : r.points) {
    motions.push_back({{"translation", io::vector_to(g.translation)}, {"rotation", io::matrix_to(g.rotation)}});
  }
  Json j = {{"matrix_re", re},
            {"matrix_im", im},
            {"eigenvalues", io::vector_to(r.eigenvalues)},
            {"min_eigenvalue", r.min_eigenvalue},
            {"verdict", std::string(to_string(r.verdict))},
            {"threshold", r.threshold},
            {"propagated_stderr", r.propagated_stderr},
            {"method", std::string(to_string(r.method))},
            {"motions", motions}};
  if (r.witness) {
    j["witness"] = io::cvector_to(*r.witness);
    j["quadratic_form"] = io::complex_to(r.quadratic_form);
  }
  return j;
}

/// Columns x0..x{n-1}, re, im, stderr, method; one row per point.
inline void write_eval_csv(std::ostream& os, const std::vector<Vector>& points,
                           const std::vector<EvalResult>& results) {
  const Eigen::Index n = points.empty() ? 0 : points.front().size();
  for (Eigen::Index i = 0; i < n; ++i) os << 'x' << i << ',';
  os << "re,im,stderr,method\n";
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (Eigen::Index i = 0; i < n; ++i) os << format_double(points[p](i)) << ',';
    const auto& r = results[p];
    os << format_double(r.value.real()) << ',' << format_double(r.value.imag()) << ','
       << format_double(r.std_error) << ',' << to_string(r.method) << '\n';
  }
}

}  // namespace sphfn
