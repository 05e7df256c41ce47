// Acceptance gates: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sphfn/cli.hpp"
#include "sphfn/sphfn.hpp"

using namespace sphfn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }
CVector cvec2(Complex a, Complex b) { return (CVector(2) << a, b).finished(); }

Vector axis(int n, double r) {
  Vector v = Vector::Zero(n);
  v(0) = r;
  return v;
}

EvalConfig monte_carlo(std::int64_t samples, std::uint64_t seed) {
  EvalConfig c;
  c.samples = samples;
  c.seed = seed;
  c.method = MethodChoice::MonteCarlo;
  return c;
}

// (1/π)∫₀^π exp(z cos θ) dθ by composite Simpson.
double modified_bessel_i0(double z, int panels = 20000) {
  const double h = kPi / panels;
  double s = 0;
  for (int i = 0; i <= panels; ++i) {
    const double w = (i == 0 || i == panels) ? 1 : (i % 2 ? 4 : 2);
    s += w * std::exp(z * std::cos(i * h));
  }
  return s * h / 3 / kPi;
}

Outcome torus_matches_bessel() {
  const GroupHandle so2 = build_group(GroupSpec::special_orthogonal(2));
  const CVector xi = cvec2(2, 0);
  const Vector x = vec2(1, 0);
  const Complex oracle = bessel_j(0, 2.0);
  const EvalResult exact = eval_spherical(so2, xi, x);
  const EvalResult mc = eval_spherical(so2, xi, x, monte_carlo(100000, 20240601));
  const double e1 = std::abs(exact.value - oracle), e2 = std::abs(mc.value - oracle);
  const bool ok = exact.method == EvalMethod::TorusQuadrature && e1 <= 1e-10 && mc.std_error > 0 &&
                  e2 <= 3 * mc.std_error;
  return {ok, fmt("|torus-J0(2)|=%.2e, |MC-J0(2)|=%.2e vs 3*stderr=%.2e", e1, e2, 3 * mc.std_error)};
}

Outcome group_independence() {
  const std::vector<std::pair<const char*, GroupSpec>> groups{{"SO(4)", GroupSpec::special_orthogonal(4)},
                                                              {"U(2)", GroupSpec::unitary(2)},
                                                              {"SU(2)", GroupSpec::special_unitary(2)},
                                                              {"Sp(1)", GroupSpec::symplectic(1)}};
  bool ok = true;
  double worst_pair = 0, worst_closed = 0;
  for (const auto& [lambda, r] : std::vector<std::pair<double, double>>{{1, 0.5}, {2, 1.5}}) {
    const CVector xi = axis(4, lambda).cast<Complex>();
    const Vector x = axis(4, r);
    const Complex closed = closed_form_spherical({4, lambda, r});
    std::vector<EvalResult> res;
    for (size_t g = 0; g < groups.size(); ++g) {
      res.push_back(eval_spherical(build_group(groups[g].second), xi, x, monte_carlo(100000, 7000 + g)));
      const double z = std::abs(res.back().value - closed) / res.back().std_error;
      worst_closed = std::max(worst_closed, z);
      ok = ok && z <= 3;
    }
    for (size_t a = 0; a < res.size(); ++a) {
      for (size_t b = a + 1; b < res.size(); ++b) {
        const double z = std::abs(res[a].value - res[b].value) / std::hypot(res[a].std_error, res[b].std_error);
        worst_pair = std::max(worst_pair, z);
        ok = ok && z <= 3;
      }
    }
  }
  return {ok, fmt("worst pairwise %.2f sigma, worst vs closed form %.2f sigma", worst_pair, worst_closed)};
}

Outcome three_dimensional_sinc() {
  const Complex v = closed_form_spherical({3, 1.5, 2});
  const double err = std::abs(v - std::sin(3.0) / 3.0);
  return {err <= 1e-12, fmt("|closed_form(3,1.5,2) - sin(3)/3| = %.2e", err)};
}

Outcome normalization() {
  const bool c2 = normalization_constant(2) == 1.0;
  double worst = 0;
  for (int n = 2; n <= 8; ++n) {
    for (double lambda : {0.5, 1.0, 3.0}) {
      worst = std::max(worst, std::abs(closed_form_spherical({n, lambda, 0.0}) - 1.0));
    }
  }
  return {c2 && worst <= 1e-14, fmt("c(2)==1: %s, max |closed_form(n,lambda,0)-1| = %.2e", c2 ? "yes" : "no", worst)};
}

Outcome functional_equation() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  double worst = 0;
  bool exact = true;
  for (const auto& spec : {cyclic4(), dihedral8()}) {
    const GroupHandle h = build_group(spec);
    const auto& elements = h.elements();
    std::uniform_int_distribution<size_t> pick(0, elements.size() - 1);
    for (int t = 0; t < 50; ++t) {
      const CVector xi = cvec2({u(rng), u(rng) / 4}, {u(rng), u(rng) / 4});
      const MotionElement g1{vec2(u(rng), u(rng)), elements[pick(rng)]};
      const MotionElement g2{vec2(u(rng), u(rng)), elements[pick(rng)]};
      const auto r = verify_functional_equation(h, xi, g1, g2);
      exact = exact && r.exact;
      worst = std::max(worst, r.residual);
    }
  }
  return {exact && worst <= 1e-10, fmt("max residual over 100 triples = %.2e", worst)};
}

Outcome laplacian_eigenvalue() {
  const Vector x = vec2(0.3, 0.7);
  const Complex c4 = eigen_check(build_group(cyclic4()), cvec2(2, 0), x);
  const CVector xi = cvec2(1, Complex(0, 0.5));
  const Complex target = bilinear_b(xi, xi);
  const Complex so2 = eigen_check(build_group(GroupSpec::special_orthogonal(2)), xi, x);
  const double e1 = std::abs(c4 - 4.0) / 4.0, e2 = std::abs(so2 - target) / std::abs(target);
  return {e1 <= 1e-4 && e2 <= 1e-4, fmt("C4 rel err %.2e, SO(2) rel err %.2e (b=%.4f)", e1, e2, target.real())};
}

Outcome equivalence() {
  const GroupHandle c4 = build_group(cyclic4());
  const double s = std::sqrt(2.0) / 2;
  const bool same = equivalent(c4, cvec2(1, 0), cvec2(0, 1));
  const bool diff = equivalent(c4, cvec2(1, 0), cvec2(s, s));
  const auto sep = separating_probe(c4, cvec2(1, 0), cvec2(s, s), {});
  const double gap = sep ? sep->difference : 0.0;

  const GroupHandle so2 = build_group(GroupSpec::special_orthogonal(2));
  const CVector null = cvec2(1, Complex(0, 1));
  const bool null_zero = equivalent(so2, null, cvec2(0, 0));
  const SphericalFunction phi(so2, null, {});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  double worst = 0;
  for (int p = 0; p < 10; ++p) worst = std::max(worst, std::abs(phi(vec2(u(rng), u(rng))).value - 1.0));
  const bool ok = same && !diff && gap > 1e-6 && null_zero && worst <= 1e-12;
  return {ok, fmt("C4 (1,0)~(0,1): %d, (1,0)~(s,s): %d, separation %.3e; SO(2) (1,i)~0: %d, max|phi-1| %.2e",
                  same, diff, gap, null_zero, worst)};
}

Outcome positive_definiteness() {
  const std::vector<GroupHandle> groups{build_group(cyclic4()), build_group(dihedral8()),
                                        build_group(GroupSpec::special_orthogonal(2)),
                                        build_group(GroupSpec::special_orthogonal(3))};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2, 2);
  bool ok = true;
  double worst_exact = 0, worst_mc_sigma = 0;
  for (int t = 0; t < 10; ++t) {
    const GroupHandle& h = groups[static_cast<size_t>(t) % groups.size()];
    CVector xi(h.dim());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = u(rng);
    EvalConfig exact;
    exact.seed = 100 + t;
    const GramReport r = posdef_verdict(h, xi, exact);
    worst_exact = std::min(worst_exact, r.min_eigenvalue);
    ok = ok && r.min_eigenvalue >= -1e-9 && r.verdict == PsdVerdict::ConsistentPSD;
    if (h.has_sampler()) {
      const GramReport m = posdef_verdict(h, xi, monte_carlo(20000, 200 + t));
      if (m.min_eigenvalue < 0) worst_mc_sigma = std::max(worst_mc_sigma, -m.min_eigenvalue / m.propagated_stderr);
      ok = ok && m.min_eigenvalue >= -3 * m.propagated_stderr;
    }
  }
  const GroupHandle so2 = groups[2];
  const std::vector<MotionElement> motions{MotionElement::identity(2), MotionElement::translate(vec2(3, 0))};
  const GramReport v = gram_matrix(so2, cvec2(Complex(0, 1), 0), motions, {});
  const double oracle = modified_bessel_i0(3.0);
  const double entry_err = std::abs(v.matrix(0, 1) - oracle);
  const bool violated = v.verdict == PsdVerdict::ViolatedPSD && entry_err <= 1e-9 && oracle > 1;
  return {ok && violated,
          fmt("min eig exact %.2e, MC worst %.2f sigma below 0; xi=(i,0): %s, entry %.6f vs I0(3) %.6f",
              worst_exact, worst_mc_sigma, std::string(to_string(v.verdict)).c_str(), v.matrix(0, 1).real(), oracle)};
}

Outcome spherical_transform_gaussian() {
  const GroupHandle so2 = build_group(GroupSpec::special_orthogonal(2));
  const double support = 6;
  const auto profile = RadialProfile::sample([](double r) { return Complex(std::exp(-r * r)); }, support, 6000);
  std::vector<SpectralParam> xis;
  for (double lambda : {0.0, 1.0, 2.0, 3.0}) xis.push_back(cvec2(lambda, 0));
  const auto t = spherical_transform(profile, so2, xis, {});
  double worst = 0;
  for (size_t i = 0; i < xis.size(); ++i) {
    const double lambda = xis[i](0).real();
    const double oracle = kPi * std::exp(-lambda * lambda / 4);
    worst = std::max(worst, std::abs(t[i].value - oracle) / oracle);
  }
  const double mass = kPi * (1 - std::exp(-support * support));
  const double at_zero = std::abs(t[0].value - mass) / mass;
  return {worst <= 1e-3 && at_zero <= 1e-6,
          fmt("max rel err vs pi*exp(-l^2/4) %.2e, rel err at 0 vs integral %.2e", worst, at_zero)};
}

Outcome lattice() {
  const std::vector<Vector> basis{vec2(1, 0), vec2(0, 1)};
  const bool yes = lattice_compatible(cvec2(2 * kPi, 0), basis, 0.0);
  const bool no = lattice_compatible(cvec2(1, 0), basis, 0.0);
  return {yes && !no, fmt("2pi*e1: %d, e1: %d", yes, no)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("sphfn_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "eval.json") << R"({"group":{"kind":"finite","generators":[[[0,-1],[1,0]],[[1,0],[0,-1]]]},
    "xi":[[2,0.25],[-0.5,0.1]],"radial":{"direction":[1,0.5],"r_max":6,"count":400}})";
  auto run = [&](const std::string& threads, const std::string& out) {
    const std::vector<std::string> args{"sphfn", "eval", "--config", (dir / "eval.json").string(),
                                        "--threads", threads, "--out", (dir / out).string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream sink_out, sink_err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), sink_out, sink_err);
  };
  const int c1 = run("1", "t1.csv"), c8 = run("8", "t8.csv"), c1b = run("1", "t1b.csv");
  const std::string a = slurp(dir / "t1.csv"), b = slurp(dir / "t8.csv"), c = slurp(dir / "t1b.csv");
  fs::remove_all(dir);
  const bool ok = c1 == 0 && c8 == 0 && c1b == 0 && !a.empty() && a == b && a == c;
  return {ok, fmt("exit codes %d/%d/%d, %zu bytes, identical: %s", c1, c8, c1b, a.size(),
                  (a == b && a == c) ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"closed form vs group average (SO(2), J0)", torus_matches_bessel},
      {"group independence in n=4", group_independence},
      {"n=3 sinc identity", three_dimensional_sinc},
      {"normalization constant", normalization},
      {"functional equation on C4 and D8", functional_equation},
      {"Laplacian eigenvalue", laplacian_eigenvalue},
      {"equivalence via fingerprints", equivalence},
      {"positive definiteness", positive_definiteness},
      {"spherical transform of a Gaussian", spherical_transform_gaussian},
      {"lattice compatibility", lattice},
      {"CLI determinism across thread counts", determinism},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s %2zu  %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
