#include <cmath>

#include "doctest.h"
#include "mingraph/taylor.hpp"

using namespace mingraph;

namespace {

std::array<int, kMaxTaylorVars> mi(int a, int b = 0, int c = 0, int d = 0) { return {a, b, c, d}; }

}  // namespace

TEST_CASE("basis sizes and nesting") {
  const auto& b = TaylorBasis::get(4, 4);
  CHECK(b.size() == 70);
  CHECK(b.prefix(0) == 1);
  CHECK(b.prefix(1) == 5);
  CHECK(b.prefix(2) == 15);
  const auto& b2 = TaylorBasis::get(4, 2);
  for (int t = 0; t < b2.size(); ++t) CHECK(b2.exponent(t) == b.exponent(t));
  CHECK(b.index(mi(5)) == -1);
  CHECK(&TaylorBasis::get(2, 3) == &TaylorBasis::get(2, 3));
}

TEST_CASE("variables and polynomial arithmetic") {
  const auto& b = TaylorBasis::get(2, 4);
  Taylor x = Taylor::variable(b, 0, 0.5), y = Taylor::variable(b, 1, -2.0);
  Taylor p = x * x * y + 3.0 * y - 1.0;
  CHECK(p.value() == doctest::Approx(0.25 * -2.0 - 6.0 - 1.0));
  CHECK(p.gradient(0) == doctest::Approx(2 * 0.5 * -2.0));
  CHECK(p.gradient(1) == doctest::Approx(0.25 + 3.0));
  CHECK(p.hessian(0, 0) == doctest::Approx(-4.0));
  CHECK(p.hessian(0, 1) == doctest::Approx(1.0));
  CHECK(p.hessian(1, 0) == doctest::Approx(1.0));
  CHECK(p.derivative(mi(2, 1)) == doctest::Approx(2.0));
  CHECK(p.derivative(mi(3, 1)) == doctest::Approx(0.0));
}

TEST_CASE("elementary functions match closed forms to fourth order") {
  const auto& b = TaylorBasis::get(2, 4);
  const double x0 = 0.3, y0 = 0.2;
  Taylor x = Taylor::variable(b, 0, x0), y = Taylor::variable(b, 1, y0);
  Taylor f = exp(x) * sin(y);
  const double s[4] = {std::sin(y0), std::cos(y0), -std::sin(y0), -std::cos(y0)};
  for (int a = 0; a <= 4; ++a)
    for (int c = 0; a + c <= 4; ++c) CHECK(f.derivative(mi(a, c)) == doctest::Approx(std::exp(x0) * s[c % 4]).epsilon(1e-13));

  Taylor l = log(cos(x));
  const double t = std::tan(x0), sec2 = 1.0 / (std::cos(x0) * std::cos(x0));
  CHECK(l.gradient(0) == doctest::Approx(-t));
  CHECK(l.derivative(mi(2)) == doctest::Approx(-sec2));
  CHECK(l.derivative(mi(3)) == doctest::Approx(-2.0 * sec2 * t));
  CHECK(l.derivative(mi(4)) == doctest::Approx(-2.0 * sec2 * (2.0 * t * t + sec2)));
}

TEST_CASE("inverse radius in four variables") {
  const auto& b = TaylorBasis::get(4, 2);
  const double p[4] = {0.7, -0.2, 0.4, 0.3};
  Taylor r2(0.0);
  for (int k = 0; k < 4; ++k) {
    Taylor v = Taylor::variable(b, k, p[k]);
    r2 = r2 + v * v;
  }
  Taylor inv = 1.0 / sqrt(r2);
  Taylor inv2 = pow(r2, -0.5);
  double rr = 0.0;
  for (double v : p) rr += v * v;
  const double r = std::sqrt(rr);
  CHECK(inv.value() == doctest::Approx(1.0 / r));
  for (int i = 0; i < 4; ++i) {
    CHECK(inv.gradient(i) == doctest::Approx(-p[i] / (r * r * r)));
    for (int j = 0; j < 4; ++j) {
      double expect = (3.0 * p[i] * p[j] - (i == j ? rr : 0.0)) / std::pow(r, 5);
      CHECK(inv.hessian(i, j) == doctest::Approx(expect).epsilon(1e-13));
      CHECK(inv2.hessian(i, j) == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("diff, truncate and mixed degrees") {
  const auto& b4 = TaylorBasis::get(1, 4);
  const auto& b2 = TaylorBasis::get(1, 2);
  Taylor x4 = Taylor::variable(b4, 0, 1.0);
  Taylor cube = x4 * x4 * x4;
  Taylor d = cube.diff(0);
  CHECK(d.degree() == 3);
  CHECK(d.value() == doctest::Approx(3.0));
  CHECK(d.gradient(0) == doctest::Approx(6.0));
  CHECK(d.derivative(mi(2)) == doctest::Approx(6.0));
  Taylor t = cube.truncate(2);
  CHECK(t.degree() == 2);
  CHECK(t.hessian(0, 0) == doctest::Approx(6.0));
  Taylor mixed = cube + Taylor::variable(b2, 0, 1.0);
  CHECK(mixed.degree() == 2);
  CHECK(mixed.gradient(0) == doctest::Approx(4.0));
  Taylor c(2.5);
  Taylor sum = c + x4;
  CHECK(sum.degree() == 4);
  CHECK(sum.value() == doctest::Approx(3.5));
}

TEST_CASE("division and square root are inverse to multiplication") {
  const auto& b = TaylorBasis::get(3, 4);
  Taylor u = Taylor::variable(b, 0, 1.3) * Taylor::variable(b, 1, 0.4) + exp(Taylor::variable(b, 2, -0.1));
  Taylor v = (u / (u * u)) * u;
  Taylor s = sqrt(u) * sqrt(u);
  for (int k = 0; k < b.size(); ++k) {
    CHECK(v.coeff(k) == doctest::Approx(1.0 * (k == 0)).epsilon(1e-12));
    CHECK(s.coeff(k) == doctest::Approx(u.coeff(k)).epsilon(1e-12));
  }
}
