#include <cmath>
#include <random>

#include "doctest.h"
#include "mingraph/errors.hpp"
#include "mingraph/example_catalog.hpp"

using namespace mingraph;

namespace {

struct Probe {
  std::string name;
  std::vector<double> x;
};

std::vector<Probe> probes() {
  return {{"linear", {0.2, -0.4}},
          {"scherk", {0.3, -0.7}},
          {"scherk_product", {0.3, -0.2, 0.5, 0.1}},
          {"holomorphic", {0.6, -0.3}},
          {"lawson_osserman", {0.7, -0.2, 0.4, 0.3}},
          {"paraboloid_control", {0.3, 0.1}}};
}

// Max error of central differences of values against the exact first and
// second derivatives, at step h.
std::pair<double, double> fd_errors(const GraphMap& map, std::vector<double> x, double h) {
  const int n = map.domain_dim(), m = map.codim();
  JetAtPoint jet = map.jet(x, 2);
  double e1 = 0.0, e2 = 0.0;
  auto at = [&](int i, int si, int j, int sj) {
    std::vector<double> y = x;
    y[i] += si * h;
    y[j] += sj * h;
    return map.value(y);
  };
  for (int i = 0; i < n; ++i) {
    auto p = at(i, 1, i, 0), q = at(i, -1, i, 0), c = map.value(x);
    for (int b = 0; b < m; ++b) {
      e1 = std::max(e1, std::abs((p[b] - q[b]) / (2 * h) - jet.first(b, i)));
      e2 = std::max(e2, std::abs((p[b] - 2 * c[b] + q[b]) / (h * h) - jet.second(b, i, i)));
    }
    for (int j = i + 1; j < n; ++j) {
      auto pp = at(i, 1, j, 1), pm = at(i, 1, j, -1), mp = at(i, -1, j, 1), mm = at(i, -1, j, -1);
      for (int b = 0; b < m; ++b)
        e2 = std::max(e2, std::abs((pp[b] - pm[b] - mp[b] + mm[b]) / (4 * h * h) - jet.second(b, i, j)));
    }
  }
  return {e1, e2};
}

}  // namespace

TEST_CASE("catalog names and construction") {
  for (const auto& name : example_names()) {
    auto map = make_example(name);
    CHECK(map->name() == name);
    CHECK(map->analytic());
    GridChart chart = default_chart(name);
    CHECK(chart.dim() == map->domain_dim());
  }
  CHECK(make_example("scherk_product")->codim() == 2);
  CHECK(make_example("lawson_osserman")->codim() == 3);
  CHECK_THROWS_AS(make_example("catenoid"), InvalidInput);
  CHECK_THROWS_AS(make_example("scherk", {{"width", 1.0}}), InvalidInput);
  CHECK_THROWS_AS(make_example("scherk", {{"half_width", "wide"}}), InvalidInput);
  CHECK_THROWS_AS(make_example("linear", {{"m", 2}, {"n", 2}, {"matrix", {1.0, 2.0}}}), InvalidInput);
}

TEST_CASE("linear maps") {
  auto zero = make_linear(2, 3, std::vector<double>(6, 0.0));
  JetAtPoint j0 = zero->jet(std::vector<double>{0.1, 0.2, 0.3});
  for (double v : j0.df) CHECK(v == 0.0);
  auto lin = make_linear(2, 2, {1.0, 2.0, -0.5, 0.25});
  JetAtPoint j = lin->jet(std::vector<double>{0.5, -1.0}, 4);
  CHECK(j.f[0] == doctest::Approx(-1.5));
  CHECK(j.f[1] == doctest::Approx(-0.5));
  CHECK(j.first(1, 0) == -0.5);
  for (double v : j.d2f) CHECK(v == 0.0);
  for (double v : j.d4f) CHECK(v == 0.0);
}

TEST_CASE("scherk values and domain") {
  auto s = make_scherk();
  CHECK(s->value(std::vector<double>{0.0, 0.0})[0] == 0.0);
  CHECK_THROWS_AS(make_scherk(1.6), DomainError);
  CHECK_THROWS_AS(make_scherk_product(2.0), DomainError);
  CHECK_THROWS_AS(s->value(std::vector<double>{1.5707963, 0.0}), DomainError);
}

TEST_CASE("holomorphic examples") {
  auto id = make_holomorphic({0.0, 1.0});
  JetAtPoint j = id->jet(std::vector<double>{0.4, 0.7});
  for (double v : j.d2f) CHECK(v == 0.0);
  auto z2 = make_example("holomorphic");
  auto v = z2->value(std::vector<double>{1.0, 2.0});
  CHECK(v[0] == doctest::Approx(-3.0));
  CHECK(v[1] == doctest::Approx(4.0));
  auto z3 = make_example("holomorphic", {{"coefficients", {0.0, {0.0, 1.0}, 0.0, 1.0}}});
  auto w = z3->value(std::vector<double>{1.0, 1.0});  // i z + z^3 at 1 + i
  CHECK(w[0] == doctest::Approx(-1.0 - 2.0));
  CHECK(w[1] == doctest::Approx(1.0 + 2.0));
}

TEST_CASE("lawson-osserman: domain, norm identity and homogeneity") {
  auto lo = make_lawson_osserman();
  CHECK_THROWS_AS(lo->value(std::vector<double>{0.1, 0.0, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(lo->value(std::vector<double>{2.0, 1.0, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(make_lawson_osserman(0.0, 1.0), DomainError);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto wide = make_lawson_osserman(0.05, 10.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(4);
    double r2 = 0.0;
    for (double& c : x) c = u(rng);
    for (double c : x) r2 += c * c;
    if (r2 < 0.09) continue;
    auto f = wide->value(x);
    double f2 = f[0] * f[0] + f[1] * f[1] + f[2] * f[2];
    CHECK(f2 == doctest::Approx(1.25 * r2).epsilon(1e-13));
    const double lam = 1.7;
    std::vector<double> y = x;
    for (double& c : y) c *= lam;
    double a1 = compute_point_geometry(wide->jet(x)).A_norm2;
    double a2 = compute_point_geometry(wide->jet(y)).A_norm2;
    CHECK(std::abs(a2 - a1 / (lam * lam)) <= 1e-8 * a1);
  }
}

TEST_CASE("paraboloid control: symmetric second derivatives") {
  JetAtPoint j = make_paraboloid_control()->jet(std::vector<double>{0.3, 0.1});
  CHECK_NOTHROW(j.validate());
  CHECK(j.second(0, 0, 0) == 2.0);
  CHECK(j.second(1, 0, 1) == 1.0);
}

TEST_CASE("derivative providers agree with finite differences of values") {
  for (const auto& p : probes()) {
    CAPTURE(p.name);
    auto map = make_example(p.name);
    auto [a1, a2] = fd_errors(*map, p.x, 0.02);
    auto [b1, b2] = fd_errors(*map, p.x, 0.01);
    if (a1 > 1e-9) CHECK(std::log2(a1 / b1) >= 1.9);
    if (a2 > 1e-7) CHECK(std::log2(a2 / b2) >= 1.9);
    CHECK(b1 < 1e-3);
    CHECK(b2 < 1e-2);
  }
}

TEST_CASE("third and fourth derivatives agree with differences of exact second derivatives") {
  for (const auto& p : probes()) {
    CAPTURE(p.name);
    auto map = make_example(p.name);
    const int n = map->domain_dim(), m = map->codim();
    JetAtPoint j = map->jet(p.x, 4);
    const double h = 1e-3;
    double err3 = 0.0, err4 = 0.0, scale = 1.0;
    for (int k = 0; k < n; ++k) {
      std::vector<double> xp = p.x, xm = p.x;
      xp[k] += h;
      xm[k] -= h;
      JetAtPoint jp = map->jet(xp, 2), jm = map->jet(xm, 2), jc = map->jet(p.x, 2);
      for (int b = 0; b < m; ++b)
        for (int i = 0; i < n; ++i)
          for (int l = 0; l < n; ++l) {
            double d3 = (jp.second(b, i, l) - jm.second(b, i, l)) / (2 * h);
            double d4 = (jp.second(b, i, l) - 2 * jc.second(b, i, l) + jm.second(b, i, l)) / (h * h);
            double e3 = j.d3f[((b * n + i) * n + l) * n + k];
            double e4 = j.d4f[(((b * n + i) * n + l) * n + k) * n + k];
            scale = std::max({scale, std::abs(e3), std::abs(e4)});
            err3 = std::max(err3, std::abs(d3 - e3));
            err4 = std::max(err4, std::abs(d4 - e4));
          }
    }
    CHECK(err3 <= 1e-5 * scale);
    CHECK(err4 <= 1e-3 * scale);
  }
}

TEST_CASE("singular sets are described") {
  CHECK(singular_set("linear") == "none");
  CHECK(singular_set("lawson_osserman").find("origin") != std::string::npos);
}
