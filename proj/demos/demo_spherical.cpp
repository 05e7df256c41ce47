// Evaluates φ_ξ^K for a few groups and prints the values next to the
// closed-form radial Bessel function.

#include <iomanip>
#include <iostream>

#include "sphfn/sphfn.hpp"

int main() {
  using namespace sphfn;
  CVector xi(2);
  xi << 2.0, 0.0;
  const auto c4 = build_group(cyclic4());
  const auto so2 = build_group(GroupSpec::special_orthogonal(2));

  std::cout << std::setprecision(10);
  std::cout << "r        C4 (dir e1)      SO(2)           closed form\n";
  for (double r = 0.0; r <= 3.0; r += 0.5) {
    Vector x(2);
    x << r, 0.0;
    const Complex a = eval_spherical(c4, xi, x).value;
    const Complex b = eval_spherical(so2, xi, x).value;
    const Complex c = closed_form_spherical({2, spectral_lambda(xi), r});
    std::cout << std::setw(8) << r << ' ' << std::setw(15) << a.real() << ' ' << std::setw(15) << b.real() << ' '
              << std::setw(15) << c.real() << '\n';
  }

  // φ is constant along K-orbits of ξ: (1, 0) and (0, 1) are C4-equivalent.
  CVector e1(2), e2(2);
  e1 << 1.0, 0.0;
  e2 << 0.0, 1.0;
  std::cout << "C4: (1,0) ~ (0,1): " << std::boolalpha << equivalent(c4, e1, e2) << '\n';

  // An imaginary parameter gives a function that is not positive definite.
  CVector imag(2);
  imag << Complex(0, 1), 0.0;
  const GramReport g = posdef_verdict(so2, imag, {});
  std::cout << "SO(2), xi = (i, 0): " << to_string(g.verdict) << ", min eigenvalue " << g.min_eigenvalue << '\n';
  return 0;
}
