#pragma once

// Command-line front end: eval, verify, transform, fingerprint.
// Exit codes: 0 ok, 1 check failed, 2 config error, 3 evaluation error.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "group.hpp"
#include "invariants.hpp"
#include "io.hpp"
#include "motion.hpp"
#include "posdef.hpp"
#include "spherical.hpp"
#include "types.hpp"

namespace sphfn::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kCheckFailed = 1, kConfigError = 2, kEvalError = 3 };

struct Options {
  std::string command;
  std::string suite;
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> samples;
  std::optional<double> tol;
  int threads = 1;
};

struct Check {
  std::string name;
  double measured = 0;
  double threshold = 0;
  bool pass = false;
  Json details = Json::object();
};

inline Json to_json(const Check& c) {
  Json j = {{"name", c.name}, {"measured", c.measured}, {"threshold", c.threshold}, {"pass", c.pass}};
  if (!c.details.empty()) j["details"] = c.details;
  return j;
}

/// What a command produced: the data file body and the checks it ran.
struct CommandOutput {
  std::string data;
  std::vector<Check> checks;
};

namespace detail {

inline Json load_config(const Options& opt) {
  if (opt.config_path.empty()) throw ConfigError("--config", "required");
  std::ifstream in(opt.config_path);
  if (!in) throw ConfigError("--config", "cannot open '" + opt.config_path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config", "expected a JSON object");
  if (opt.seed) doc["seed"] = *opt.seed;
  if (opt.samples) doc["samples"] = *opt.samples;
  if (opt.tol) doc["tol"] = *opt.tol;
  return doc;
}

inline std::filesystem::path resolve(const Options& opt, const std::string& file) {
  std::filesystem::path p(file);
  if (p.is_relative()) p = std::filesystem::path(opt.config_path).parent_path() / p;
  return p;
}

/// Numeric CSV rows; a non-numeric first line is taken as a header.
inline std::vector<std::vector<double>> read_csv(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError(field, "non-numeric row in '" + path.string() + "'");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline GroupHandle load_group(const Json& doc) {
  return build_group(group_spec_from_json(io::require(doc, "group", "config"), "group"));
}

inline CVector load_xi(const Json& j, int n, const std::string& path) {
  CVector xi = io::cvector_from(j, path);
  if (xi.size() != n) throw ConfigError(path, "expected " + std::to_string(n) + " components");
  return xi;
}

/// "xis": [...] or "xi": [...]; "lambdas" gives λ·e₁.
inline std::vector<CVector> load_xis(const Json& doc, int n) {
  std::vector<CVector> out;
  if (doc.contains("xis")) {
    const Json& xs = doc["xis"];
    if (!xs.is_array() || xs.empty()) throw ConfigError("xis", "expected a non-empty array");
    for (std::size_t i = 0; i < xs.size(); ++i) out.push_back(load_xi(xs[i], n, "xis[" + std::to_string(i) + "]"));
  } else if (doc.contains("lambdas")) {
    const Json& ls = doc["lambdas"];
    if (!ls.is_array() || ls.empty()) throw ConfigError("lambdas", "expected a non-empty array");
    for (std::size_t i = 0; i < ls.size(); ++i) {
      CVector xi = CVector::Zero(n);
      xi(0) = io::complex_from(ls[i], "lambdas[" + std::to_string(i) + "]");
      out.push_back(xi);
    }
  } else {
    out.push_back(load_xi(io::require(doc, "xi", "config"), n, "xi"));
  }
  return out;
}

inline Vector load_point(const Json& j, int n, const std::string& path) {
  Vector x = io::vector_from(j, path);
  if (x.size() != n) throw ConfigError(path, "expected " + std::to_string(n) + " components");
  return x;
}

/// "points": [[...], ...] or "radial": {"direction", "r_min", "r_max", "count"}.
inline std::vector<Vector> load_points(const Json& doc, int n) {
  std::vector<Vector> out;
  if (doc.contains("points")) {
    const Json& ps = doc["points"];
    if (!ps.is_array() || ps.empty()) throw ConfigError("points", "expected a non-empty array");
    for (std::size_t i = 0; i < ps.size(); ++i) out.push_back(load_point(ps[i], n, "points[" + std::to_string(i) + "]"));
    return out;
  }
  if (doc.contains("radial")) {
    const Json& r = doc["radial"];
    Vector dir = Vector::Unit(n, 0);
    if (r.contains("direction")) dir = load_point(r["direction"], n, "radial.direction");
    if (!(dir.norm() > 0)) throw ConfigError("radial.direction", "must be nonzero");
    dir /= dir.norm();
    const double r0 = r.contains("r_min") ? io::number(r["r_min"], "radial.r_min") : 0.0;
    const double r1 = io::number(io::require(r, "r_max", "radial"), "radial.r_max");
    const int count = io::integer(io::require(r, "count", "radial"), "radial.count");
    if (count < 1) throw ConfigError("radial.count", "must be positive");
    if (r1 < r0) throw ConfigError("radial.r_max", "must be >= r_min");
    for (int i = 0; i < count; ++i) {
      const double t = count == 1 ? r0 : r0 + (r1 - r0) * i / (count - 1);
      out.push_back(dir * t);
    }
    return out;
  }
  throw ConfigError("points", "missing (give \"points\" or \"radial\")");
}

inline double opt_number(const Json& doc, const std::string& key, double fallback) {
  return doc.contains(key) ? io::number(doc[key], key) : fallback;
}

inline int opt_integer(const Json& doc, const std::string& key, int fallback) {
  return doc.contains(key) ? io::integer(doc[key], key) : fallback;
}

inline std::string xi_label(const CVector& xi) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < xi.size(); ++i) {
    if (i) os << ',';
    os << xi(i).real();
    if (xi(i).imag() != 0) os << (xi(i).imag() > 0 ? "+" : "") << xi(i).imag() << 'i';
  }
  os << ')';
  return os.str();
}

inline Matrix random_rotation(const GroupHandle& h, std::uint64_t seed) {
  if (!h.has_sampler()) return Matrix::Identity(h.dim(), h.dim());
  return haar_samples(h, seed, 1).front();
}

// --- eval -----------------------------------------------------------------

inline CommandOutput cmd_eval(const Json& doc, const Options& opt) {
  const EvalConfig cfg = eval_config_from_json(doc);
  const GroupHandle h = load_group(doc);
  const CVector xi = load_xi(io::require(doc, "xi", "config"), h.dim(), "xi");
  const auto points = load_points(doc, h.dim());
  const auto results = evaluate_batch(h, xi, points, cfg, opt.threads);
  std::ostringstream os;
  write_eval_csv(os, points, results);
  return {os.str(), {}};
}

// --- verify suites --------------------------------------------------------

inline std::vector<Check> suite_functional(const Json& doc, const EvalConfig& cfg) {
  const GroupHandle h = load_group(doc);
  const int n = h.dim();
  const int triples = opt_integer(doc, "triples", 50);
  const double threshold = opt_number(doc, "threshold", 1e-10);
  const double sigmas = opt_number(doc, "sigmas", 3.0);
  const double spread = opt_number(doc, "translation_scale", 1.0);
  std::vector<CVector> fixed;
  if (doc.contains("xi") || doc.contains("xis") || doc.contains("lambdas")) fixed = load_xis(doc, n);
  std::mt19937_64 rng(derive_seed(cfg.seed, 0xfe));
  std::normal_distribution<double> normal;
  auto motion = [&](std::uint64_t tag) {
    Vector x(n);
    for (int d = 0; d < n; ++d) x(d) = spread * normal(rng);
    return MotionElement{x, random_rotation(h, derive_seed(cfg.seed, tag))};
  };
  std::vector<Check> out;
  for (int t = 0; t < triples; ++t) {
    CVector xi(n);
    if (!fixed.empty()) {
      xi = fixed[static_cast<size_t>(t) % fixed.size()];
    } else {
      for (int d = 0; d < n; ++d) xi(d) = Complex(normal(rng), normal(rng));
    }
    const MotionElement g1 = motion(0x100000 + 2 * static_cast<std::uint64_t>(t));
    const MotionElement g2 = motion(0x100001 + 2 * static_cast<std::uint64_t>(t));
    EvalConfig c = cfg;
    c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
    const auto r = verify_functional_equation(h, xi, g1, g2, c);
    Check ch;
    ch.name = "functional[" + std::to_string(t) + "] xi=" + xi_label(xi);
    ch.measured = r.residual;
    ch.threshold = r.exact ? threshold : threshold + sigmas * r.std_error;
    ch.pass = r.residual <= ch.threshold;
    ch.details = {{"exact", r.exact}, {"std_error", r.std_error}};
    out.push_back(std::move(ch));
  }
  return out;
}

inline std::vector<Check> suite_eigen(const Json& doc, const EvalConfig& cfg) {
  const GroupHandle h = load_group(doc);
  const int n = h.dim();
  const auto xis = load_xis(doc, n);
  std::vector<Vector> points;
  if (doc.contains("points") || doc.contains("radial")) {
    points = load_points(doc, n);
  } else {
    Vector x(n);
    for (int d = 0; d < n; ++d) x(d) = 0.3 / (d + 1);
    points.push_back(x);
  }
  const double step = opt_number(doc, "step", 1e-3);
  const double threshold = opt_number(doc, "threshold", 1e-4);
  std::vector<Check> out;
  for (const auto& xi : xis) {
    const Complex expected = bilinear_b(xi, xi);
    for (const auto& x : points) {
      const Complex est = eigen_check(h, xi, x, step, cfg);
      Check ch;
      ch.name = "eigen xi=" + xi_label(xi);
      ch.measured = std::abs(est - expected) / std::max(1.0, std::abs(expected));
      ch.threshold = threshold;
      ch.pass = ch.measured <= threshold;
      ch.details = {{"estimate", io::complex_to(est)}, {"expected", io::complex_to(expected)},
                    {"x", io::vector_to(x)}};
      out.push_back(std::move(ch));
    }
  }
  return out;
}

inline std::vector<Check> suite_posdef(const Json& doc, const EvalConfig& cfg) {
  const GroupHandle h = load_group(doc);
  const auto xis = load_xis(doc, h.dim());
  PosdefOptions po;
  po.motion_count = opt_integer(doc, "motion_count", po.motion_count);
  po.ball_radius = opt_number(doc, "ball_radius", po.ball_radius);
  po.tol_abs = opt_number(doc, "tol_abs", po.tol_abs);
  const int trials = opt_integer(doc, "trials", 1);
  std::string expect = "auto";
  if (doc.contains("expect")) {
    if (!doc["expect"].is_string()) throw ConfigError("expect", "expected a string");
    expect = doc["expect"].get<std::string>();
    if (expect != "auto" && expect != "consistent" && expect != "violated") {
      throw ConfigError("expect", "expected auto, consistent or violated");
    }
  }
  std::vector<Check> out;
  for (std::size_t i = 0; i < xis.size(); ++i) {
    const bool real = xis[i].imag().isZero(0.0);
    const bool want_psd = expect == "consistent" || (expect == "auto" && real);
    for (int t = 0; t < trials; ++t) {
      EvalConfig c = cfg;
      c.seed = derive_seed(cfg.seed, i * 1000 + static_cast<std::uint64_t>(t));
      const GramReport r = posdef_verdict(h, xis[i], c, po);
      double max_entry = 0;
      for (Eigen::Index a = 0; a < r.matrix.rows(); ++a) {
        for (Eigen::Index b = 0; b < r.matrix.cols(); ++b) max_entry = std::max(max_entry, std::abs(r.matrix(a, b)));
      }
      Check ch;
      ch.name = "posdef xi=" + xi_label(xis[i]) + " trial " + std::to_string(t) + " expect " +
                (want_psd ? "ConsistentPSD" : "ViolatedPSD");
      ch.measured = r.min_eigenvalue;
      ch.threshold = -r.threshold;
      ch.pass = (r.verdict == PsdVerdict::ConsistentPSD) == want_psd;
      ch.details = {{"verdict", std::string(to_string(r.verdict))},
                    {"max_abs_entry", max_entry},
                    {"propagated_stderr", r.propagated_stderr},
                    {"method", std::string(to_string(r.method))}};
      if (r.witness) ch.details["quadratic_form"] = io::complex_to(r.quadratic_form);
      out.push_back(std::move(ch));
    }
  }
  return out;
}

inline std::vector<Check> suite_equivalence(const Json& doc, const EvalConfig& cfg) {
  const GroupHandle h = load_group(doc);
  const int n = h.dim();
  const Json& pairs = io::require(doc, "pairs", "config");
  if (!pairs.is_array() || pairs.empty()) throw ConfigError("pairs", "expected a non-empty array");
  const int probes = opt_integer(doc, "probes", 64);
  const double radius = opt_number(doc, "radius", 3.0);
  const double separation = opt_number(doc, "separation_threshold", 1e-6);
  const double agreement = opt_number(doc, "agreement_threshold", 1e-9);
  std::vector<Check> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string path = "pairs[" + std::to_string(i) + "]";
    const CVector a = load_xi(io::require(pairs[i], "xi", path), n, path + ".xi");
    const CVector b = load_xi(io::require(pairs[i], "xi2", path), n, path + ".xi2");
    const Json& e = io::require(pairs[i], "expect", path);
    if (!e.is_boolean()) throw ConfigError(path + ".expect", "expected true or false");
    const bool expected = e.get<bool>();
    const bool eq = equivalent(h, a, b, cfg.tol);
    const std::string label = xi_label(a) + " ~ " + xi_label(b);
    out.push_back({"fingerprint " + label, eq ? 1.0 : 0.0, expected ? 1.0 : 0.0, eq == expected,
                   {{"equivalent", eq}}});
    const auto sweep = separating_probe(h, a, b, cfg, probes, radius, -1.0);
    const double diff = sweep ? sweep->difference : 0.0;
    Check ch;
    if (expected) {
      ch = {"phi agreement " + label, diff, agreement, diff <= agreement, {}};
    } else {
      ch = {"phi separation " + label, diff, separation, diff > separation, {}};
      if (sweep) ch.details = {{"x", io::vector_to(sweep->x)}};
    }
    out.push_back(std::move(ch));
  }
  return out;
}

inline std::vector<Check> suite_crossgroup(const Json& doc, const EvalConfig& cfg) {
  const Json& gs = io::require(doc, "groups", "config");
  if (!gs.is_array() || gs.size() < 2) throw ConfigError("groups", "expected at least two groups");
  std::vector<GroupHandle> groups;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const GroupSpec spec = group_spec_from_json(gs[i], "groups[" + std::to_string(i) + "]");
    groups.push_back(build_group(spec));
    names.push_back(std::string(to_string(spec.kind)) + "/" + std::to_string(spec.ambient_dim));
    if (groups.back().dim() != groups.front().dim()) {
      throw ConfigError("groups[" + std::to_string(i) + "]", "all groups must act on the same dimension");
    }
  }
  const int n = groups.front().dim();
  const Json& ps = io::require(doc, "probes", "config");
  if (!ps.is_array() || ps.empty()) throw ConfigError("probes", "expected a non-empty array");
  const double sigmas = opt_number(doc, "sigmas", 3.0);
  std::vector<Check> out;
  for (std::size_t p = 0; p < ps.size(); ++p) {
    const std::string path = "probes[" + std::to_string(p) + "]";
    const Complex lambda = io::complex_from(io::require(ps[p], "lambda", path), path + ".lambda");
    const double r = io::number(io::require(ps[p], "r", path), path + ".r");
    CVector xi = CVector::Zero(n);
    xi(0) = lambda;
    const Vector x = Vector::Unit(n, 0) * r;
    const Complex closed = closed_form_spherical({n, lambda, r});
    std::vector<EvalResult> vals;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      EvalConfig c = cfg;
      c.method = MethodChoice::MonteCarlo;
      c.seed = derive_seed(cfg.seed, 0xc0000 + p * 64 + g);
      vals.push_back(SphericalFunction(groups[g], xi, c)(x));
      const double diff = std::abs(vals.back().value - closed);
      const double thr = sigmas * vals.back().std_error;
      out.push_back({names[g] + " vs closed form at (lambda=" + format_double(lambda.real()) +
                         ", r=" + format_double(r) + ")",
                     diff, thr, diff <= thr,
                     {{"value", io::complex_to(vals.back().value)}, {"closed_form", io::complex_to(closed)}}});
    }
    for (std::size_t a = 0; a < groups.size(); ++a) {
      for (std::size_t b = a + 1; b < groups.size(); ++b) {
        const double diff = std::abs(vals[a].value - vals[b].value);
        const double thr = sigmas * std::hypot(vals[a].std_error, vals[b].std_error);
        out.push_back({names[a] + " vs " + names[b] + " at (lambda=" + format_double(lambda.real()) +
                           ", r=" + format_double(r) + ")",
                       diff, thr, diff <= thr, {}});
      }
    }
  }
  return out;
}

inline CommandOutput cmd_verify(const Json& doc, const Options& opt) {
  const EvalConfig cfg = eval_config_from_json(doc);
  std::vector<Check> checks;
  if (opt.suite == "functional") {
    checks = suite_functional(doc, cfg);
  } else if (opt.suite == "eigen") {
    checks = suite_eigen(doc, cfg);
  } else if (opt.suite == "posdef") {
    checks = suite_posdef(doc, cfg);
  } else if (opt.suite == "equivalence") {
    checks = suite_equivalence(doc, cfg);
  } else if (opt.suite == "crossgroup") {
    checks = suite_crossgroup(doc, cfg);
  } else {
    throw ConfigError("suite", "unknown suite '" + opt.suite + "'");
  }
  Json report = {{"suite", opt.suite}, {"checks", Json::array()}};
  bool all = true;
  for (const auto& c : checks) {
    report["checks"].push_back(to_json(c));
    all = all && c.pass;
  }
  report["passed"] = all;
  return {report.dump(2) + "\n", std::move(checks)};
}

// --- transform ------------------------------------------------------------

inline std::function<Complex(double)> named_profile(const Json& j, const std::string& path) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "zero") return [](double) { return Complex(0.0); };
  if (kind == "gaussian") {
    const double alpha = j.contains("alpha") ? io::number(j["alpha"], path + ".alpha") : 1.0;
    const Complex amp = j.contains("amplitude") ? io::complex_from(j["amplitude"], path + ".amplitude") : 1.0;
    if (!(alpha > 0)) throw ConfigError(path + ".alpha", "must be positive");
    return [alpha, amp](double r) { return amp * std::exp(-alpha * r * r); };
  }
  throw ConfigError(path + ".kind", "expected gaussian or zero");
}

inline RadialProfile load_profile(const Json& j, const Options& opt) {
  RadialProfile p;
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw ConfigError("profile.kind", "expected a string");
    const auto f = named_profile(j, "profile");
    const double support = io::number(io::require(j, "support", "profile"), "profile.support");
    const int intervals = j.contains("intervals") ? io::integer(j["intervals"], "profile.intervals") : 6000;
    if (!(support > 0)) throw ConfigError("profile.support", "must be positive");
    if (intervals < 2) throw ConfigError("profile.intervals", "must be at least 2");
    return RadialProfile::sample(f, support, intervals);
  }
  if (j.contains("csv")) {
    if (!j["csv"].is_string()) throw ConfigError("profile.csv", "expected a path");
    for (const auto& row : read_csv(resolve(opt, j["csv"].get<std::string>()), "profile.csv")) {
      if (row.size() < 2) throw ConfigError("profile.csv", "rows need r, re[, im]");
      p.grid.push_back(row[0]);
      p.values.emplace_back(row[1], row.size() > 2 ? row[2] : 0.0);
    }
  } else {
    const Json& g = io::require(j, "grid", "profile");
    const Json& v = io::require(j, "values", "profile");
    if (!g.is_array() || !v.is_array() || g.size() != v.size()) {
      throw ConfigError("profile", "grid and values must be arrays of equal length");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      p.grid.push_back(io::number(g[i], "profile.grid[" + std::to_string(i) + "]"));
      p.values.push_back(io::complex_from(v[i], "profile.values[" + std::to_string(i) + "]"));
    }
  }
  p.support_radius = j.contains("support_radius") ? io::number(j["support_radius"], "profile.support_radius")
                                                  : (p.grid.empty() ? 0.0 : p.grid.back());
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError("profile", e.what());
  }
  return p;
}

inline GridFunction load_grid_function(const Json& j, int n, const Options& opt) {
  GridFunction gf;
  gf.half_width = io::number(io::require(j, "half_width", "grid_function"), "grid_function.half_width");
  gf.points_per_axis = io::integer(io::require(j, "points_per_axis", "grid_function"), "grid_function.points_per_axis");
  if (!(gf.half_width > 0)) throw ConfigError("grid_function.half_width", "must be positive");
  if (gf.points_per_axis < 5 || gf.points_per_axis % 2 == 0) {
    throw ConfigError("grid_function.points_per_axis", "must be odd and at least 5");
  }
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw ConfigError("grid_function.kind", "expected a string");
    const auto radial = named_profile(j, "grid_function");
    gf.f = [radial](const Vector& x) { return radial(x.norm()); };
    return gf;
  }
  // Tabulated values, axis 0 varying fastest.
  const auto q = static_cast<std::size_t>(gf.points_per_axis);
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) total *= q;
  auto values = std::make_shared<std::vector<Complex>>();
  if (j.contains("csv")) {
    if (!j["csv"].is_string()) throw ConfigError("grid_function.csv", "expected a path");
    for (const auto& row : read_csv(resolve(opt, j["csv"].get<std::string>()), "grid_function.csv")) {
      if (row.empty()) continue;
      values->emplace_back(row[0], row.size() > 1 ? row[1] : 0.0);
    }
  } else {
    const Json& v = io::require(j, "values", "grid_function");
    if (!v.is_array()) throw ConfigError("grid_function.values", "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      values->push_back(io::complex_from(v[i], "grid_function.values[" + std::to_string(i) + "]"));
    }
  }
  if (values->size() != total) {
    throw ConfigError("grid_function.values", "expected " + std::to_string(total) + " entries");
  }
  const double step = 2 * gf.half_width / (gf.points_per_axis - 1);
  const double hw = gf.half_width;
  gf.f = [values, q, step, hw](const Vector& x) {
    std::size_t index = 0, stride = 1;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
      const auto k = static_cast<std::size_t>(std::llround((x(d) + hw) / step));
      index += std::min(k, q - 1) * stride;
      stride *= q;
    }
    return (*values)[index];
  };
  return gf;
}

inline CommandOutput cmd_transform(const Json& doc, const Options& opt) {
  const EvalConfig cfg = eval_config_from_json(doc);
  const GroupHandle h = load_group(doc);
  const int n = h.dim();
  const auto xis = load_xis(doc, n);
  std::vector<TransformValue> values;
  if (doc.contains("profile")) {
    values = spherical_transform(load_profile(doc["profile"], opt), h, xis, cfg);
  } else if (doc.contains("grid_function")) {
    values = spherical_transform(load_grid_function(doc["grid_function"], n, opt), h, xis, cfg);
  } else {
    throw ConfigError("profile", "missing (give \"profile\" or \"grid_function\")");
  }
  std::vector<QuotientPoint> fps;
  for (const auto& xi : xis) fps.push_back(fingerprint(h, xi));
  std::ostringstream os;
  for (Eigen::Index i = 0; i < n; ++i) os << "xi" << i << "_re,xi" << i << "_im,";
  for (std::size_t k = 0; k < fps.front().values.size(); ++k) os << "fp" << k << "_re,fp" << k << "_im,";
  os << "re,im,error\n";
  for (std::size_t r = 0; r < xis.size(); ++r) {
    for (Eigen::Index i = 0; i < n; ++i) {
      os << format_double(xis[r](i).real()) << ',' << format_double(xis[r](i).imag()) << ',';
    }
    for (const auto& v : fps[r].values) os << format_double(v.real()) << ',' << format_double(v.imag()) << ',';
    os << format_double(values[r].value.real()) << ',' << format_double(values[r].value.imag()) << ','
       << format_double(values[r].error_estimate) << '\n';
  }
  return {os.str(), {}};
}

// --- fingerprint ----------------------------------------------------------

inline CommandOutput cmd_fingerprint(const Json& doc, const Options&) {
  const EvalConfig cfg = eval_config_from_json(doc);
  const GroupHandle h = load_group(doc);
  const auto xis = load_xis(doc, h.dim());
  std::vector<QuotientPoint> fps;
  Json out = {{"fingerprints", Json::array()}};
  for (const auto& xi : xis) {
    fps.push_back(fingerprint(h, xi));
    Json f = to_json(fps.back());
    f["xi"] = io::cvector_to(xi);
    out["fingerprints"].push_back(f);
  }
  Json eq = Json::array();
  for (const auto& a : fps) {
    Json row = Json::array();
    for (const auto& b : fps) row.push_back(equivalent(a, b, cfg.tol));
    eq.push_back(row);
  }
  out["equivalent"] = eq;
  return {out.dump(2) + "\n", {}};
}

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonOrthogonalGenerator:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::InvalidArgument:
    case ErrorKind::DegenerateBasis: return kConfigError;
    default: return kEvalError;
  }
}

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("--out", "cannot write '" + path + "'");
  f << body;
}

}  // namespace detail

/// Runs one command; writes the data file (or stdout) plus a manifest and
/// returns the exit code. Failures print a JSON error object to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options opt;
  CLI::App app{"Spherical functions on Euclidean space"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  auto common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file")->required();
    sub->add_option("--out", opt.out_path, "output file (default: stdout)");
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_option("--samples", opt.samples, "override the Monte Carlo sample count");
    sub->add_option("--tol", opt.tol, "override the tolerance");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
  };
  common(app.add_subcommand("eval", "evaluate phi at probe points (CSV)"));
  auto* verify = app.add_subcommand("verify", "run a verification suite (JSON report)");
  verify->add_option("suite", opt.suite, "functional | eigen | posdef | equivalence | crossgroup")
      ->required()
      ->check(CLI::IsMember({"functional", "eigen", "posdef", "equivalence", "crossgroup"}));
  common(verify);
  common(app.add_subcommand("transform", "spherical transform of a K-invariant function (CSV)"));
  common(app.add_subcommand("fingerprint", "invariant fingerprints and equivalence (JSON)"));

  auto fail = [&err](int code, const std::string& kind, const std::string& message, const std::string& field = "") {
    Json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
    if (!field.empty()) j["field"] = field;
    err << j.dump() << '\n';
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    return fail(kConfigError, "UsageError", e.what());
  }
  for (const auto* sub : app.get_subcommands()) opt.command = sub->get_name();

  const auto start = std::chrono::steady_clock::now();
  try {
    const Json doc = detail::load_config(opt);
    CommandOutput result;
    if (opt.command == "eval") {
      result = detail::cmd_eval(doc, opt);
    } else if (opt.command == "verify") {
      result = detail::cmd_verify(doc, opt);
    } else if (opt.command == "transform") {
      result = detail::cmd_transform(doc, opt);
    } else {
      result = detail::cmd_fingerprint(doc, opt);
    }
    std::size_t failed = 0;
    for (const auto& c : result.checks) failed += c.pass ? 0 : 1;
    if (opt.out_path.empty()) {
      out << result.data;
    } else {
      detail::write_file(opt.out_path, result.data);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      Json manifest = {{"command", opt.command},
                       {"config", doc},
                       {"config_path", opt.config_path},
                       {"seeds", Json::array({eval_config_from_json(doc).seed})},
                       {"version", kVersion},
                       {"threads", opt.threads},
                       {"duration_seconds", seconds},
                       {"output", opt.out_path},
                       {"checks", {{"total", result.checks.size()},
                                   {"passed", result.checks.size() - failed},
                                   {"failed", failed}}}};
      if (!opt.suite.empty()) manifest["suite"] = opt.suite;
      detail::write_file(opt.out_path + ".manifest.json", manifest.dump(2) + "\n");
    }
    return failed ? kCheckFailed : kOk;
  } catch (const ConfigError& e) {
    return fail(kConfigError, "ConfigError", e.what(), e.field());
  } catch (const Error& e) {
    return fail(detail::exit_code_for(e.kind()), std::string(to_string(e.kind())), e.what());
  } catch (const Json::exception& e) {
    return fail(kConfigError, "ConfigError", e.what());
  } catch (const std::exception& e) {
    return fail(kEvalError, "RuntimeError", e.what());
  }
}

}  // namespace sphfn::cli
