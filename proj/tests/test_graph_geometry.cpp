#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "mingraph/errors.hpp"
#include "mingraph/example_catalog.hpp"
#include "mingraph/graph_geometry.hpp"

using namespace mingraph;

// Reference values below come from tests/oracles/geometry_oracle.py
// (sympy differentiation, mpmath linear algebra at 40 digits).

namespace {

JetAtPoint flat_jet(int n, int m, std::vector<double> df, std::vector<double> d2f = {}) {
  JetAtPoint jet;
  jet.n = n;
  jet.m = m;
  jet.x.assign(n, 0.0);
  jet.f.assign(m, 0.0);
  jet.df = std::move(df);
  jet.d2f = d2f.empty() ? std::vector<double>(m * n * n, 0.0) : std::move(d2f);
  return jet;
}

JetAtPoint random_jet(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> nd(0.0, 0.8);
  JetAtPoint jet = flat_jet(n, m, std::vector<double>(m * n));
  for (double& v : jet.df) v = nd(rng);
  for (int b = 0; b < m; ++b)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double v = nd(rng);
        jet.d2f[(b * n + i) * n + j] = v;
        jet.d2f[(b * n + j) * n + i] = v;
      }
  return jet;
}

double frob(const std::vector<double>& t) {
  double s = 0.0;
  for (double v : t) s += v * v;
  return std::sqrt(s);
}

void check_frames_orthonormal(const Frames& fr) {
  const int len = fr.ambient();
  std::vector<const double*> all;
  for (int i = 0; i < fr.n; ++i) all.push_back(fr.tangent_vector(i));
  for (int a = 0; a < fr.m; ++a) all.push_back(fr.normal_vector(a));
  for (std::size_t p = 0; p < all.size(); ++p)
    for (std::size_t q = 0; q < all.size(); ++q) {
      double s = 0.0;
      for (int c = 0; c < len; ++c) s += all[p][c] * all[q][c];
      CHECK(std::abs(s - (p == q ? 1.0 : 0.0)) <= 1e-12);
    }
}

// Orthogonal matrix from QR of a Gaussian matrix.
std::vector<double> random_orthogonal(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> nd;
  std::vector<double> q(m * m);
  for (double& v : q) v = nd(rng);
  for (int r = 0; r < m; ++r) {
    for (int p = 0; p < r; ++p) {
      double c = 0.0;
      for (int k = 0; k < m; ++k) c += q[r * m + k] * q[p * m + k];
      for (int k = 0; k < m; ++k) q[r * m + k] -= c * q[p * m + k];
    }
    double nrm = 0.0;
    for (int k = 0; k < m; ++k) nrm += q[r * m + k] * q[r * m + k];
    for (int k = 0; k < m; ++k) q[r * m + k] /= std::sqrt(nrm);
  }
  return q;
}

}  // namespace

TEST_CASE("metric: identity and one-dimensional cases") {
  auto g0 = compute_metric(flat_jet(2, 2, std::vector<double>(4, 0.0)));
  CHECK(g0.g == std::vector<double>{1, 0, 0, 1});
  CHECK(g0.sqrt_g == 1.0);
  auto g1 = compute_metric(flat_jet(1, 1, {1.0}));
  CHECK(g1.g[0] == 2.0);
  CHECK(g1.sqrt_g == doctest::Approx(std::sqrt(2.0)));
  CHECK(compute_star_omega(flat_jet(1, 1, {1.0})) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(compute_star_omega(flat_jet(3, 2, std::vector<double>(6, 0.0))) == 1.0);
}

TEST_CASE("scherk at (pi/4, 0)") {
  auto map = make_scherk();
  std::vector<double> x{std::numbers::pi / 4, 0.0};
  JetAtPoint jet = map->jet(x);
  CHECK(jet.first(0, 0) == doctest::Approx(-1.0));
  CHECK(jet.first(0, 1) == doctest::Approx(0.0));
  auto met = compute_metric(jet);
  CHECK(met.g[0] == doctest::Approx(2.0));
  CHECK(met.g[1] == doctest::Approx(0.0));
  CHECK(met.g[3] == doctest::Approx(1.0));
  CHECK(met.sqrt_g == doctest::Approx(std::sqrt(2.0)));
  PointGeometry geo = compute_point_geometry(jet);
  check_frames_orthonormal(geo.frames);
  CHECK(geo.A_norm2 == doctest::Approx(1.0));
  CHECK(geo.h_at(0, 0, 0) == doctest::Approx(-0.7071067811865475244));
  CHECK(geo.h_at(0, 1, 1) == doctest::Approx(0.7071067811865475244));
  CHECK(std::abs(geo.h_at(0, 0, 1)) < 1e-14);
}

TEST_CASE("scherk: minimal at the origin and pinned values at (0.3, -0.7)") {
  auto map = make_scherk();
  PointGeometry g0 = compute_point_geometry(map->jet(std::vector<double>{0.0, 0.0}));
  CHECK(std::abs(g0.H[0]) < 1e-14);
  CHECK(g0.A_norm2 == doctest::Approx(2.0));
  PointGeometry g1 = compute_point_geometry(map->jet(std::vector<double>{0.3, -0.7}));
  CHECK(g1.A_norm2 == doctest::Approx(1.149615135885161562).epsilon(1e-13));
  CHECK(g1.star_omega == doctest::Approx(0.74429434572919049339).epsilon(1e-13));
  CHECK(std::abs(g1.H[0]) < 1e-13);
  const double* nu = g1.frames.normal_vector(0);
  CHECK(nu[0] == doctest::Approx(0.23023722151351608241).epsilon(1e-13));
  CHECK(nu[1] == doctest::Approx(0.62691047905206719425).epsilon(1e-13));
  CHECK(nu[2] == doctest::Approx(0.74429434572919049339).epsilon(1e-13));
  CHECK(flatness_defect(g1.R_perp) == 0.0);
}

TEST_CASE("frames of simple graphs") {
  Frames f0 = build_frames(flat_jet(2, 2, std::vector<double>(4, 0.0)));
  CHECK(f0.tangent == std::vector<double>{1, 0, 0, 0, 0, 1, 0, 0});
  CHECK(f0.normal == std::vector<double>{0, 0, 1, 0, 0, 0, 0, 1});
  Frames f1 = build_frames(flat_jet(1, 1, {1.0}));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(f1.tangent[0] == doctest::Approx(r));
  CHECK(f1.tangent[1] == doctest::Approx(r));
  CHECK(f1.normal[0] == doctest::Approx(-r));
  CHECK(f1.normal[1] == doctest::Approx(r));
}

TEST_CASE("second fundamental form: sign fixed on the parabola") {
  JetAtPoint jet = flat_jet(1, 1, {0.0}, {1.0});
  PointGeometry geo = compute_point_geometry(jet);
  CHECK(geo.h[0] == doctest::Approx(1.0));
  CHECK(geo.A_norm2 == doctest::Approx(1.0));
  // Away from the vertex: |f''| / (1 + f'^2)^{3/2}.
  JetAtPoint jet2 = flat_jet(1, 1, {0.5}, {1.0});
  CHECK(compute_point_geometry(jet2).h[0] == doctest::Approx(1.0 / std::pow(1.25, 1.5)));
  auto lin = compute_point_geometry(flat_jet(2, 3, {1, 2, 3, 4, 5, 6}));
  CHECK(lin.A_norm2 == 0.0);
  CHECK(flatness_defect(lin.R_perp) == 0.0);
}

TEST_CASE("scherk product: star omega, minors and block additivity") {
  auto map = make_scherk_product();
  std::vector<double> x{std::numbers::pi / 4, 0.0, std::numbers::pi / 4, 0.0};
  JetAtPoint jet = map->jet(x);
  CHECK(compute_star_omega(jet) == doctest::Approx(0.5));
  PointGeometry geo = compute_point_geometry(jet);
  CHECK(compute_omega_minor(geo.frames, 0, 1, 0, 2) == doctest::Approx(0.5));
  CHECK(std::abs(compute_omega_minor(geo.frames, 0, 1, 0, 1)) < 1e-14);
  CHECK(compute_omega_minor(geo.frames, 1, 0, 0, 2) == doctest::Approx(-0.5));
  CHECK(std::abs(compute_omega_minor(geo.frames, 0, 0, 0, 2)) < 1e-14);

  std::vector<double> y{0.3, -0.2, 0.5, 0.1};
  PointGeometry g2 = compute_point_geometry(map->jet(y));
  CHECK(compute_omega_minor(g2.frames, 0, 1, 0, 2) == doctest::Approx(0.1416799342470381051).epsilon(1e-12));
  CHECK(compute_omega_minor(g2.frames, 1, 0, 1, 3) == doctest::Approx(0.013981162234965185005).epsilon(1e-12));
  CHECK(g2.star_omega == doctest::Approx(0.81992218777171383808).epsilon(1e-13));
  CHECK(g2.A_norm2 == doctest::Approx(3.2974018139095441767).epsilon(1e-13));
  auto s = make_scherk();
  double a12 = compute_point_geometry(s->jet(std::vector<double>{0.3, -0.2})).A_norm2;
  double a34 = compute_point_geometry(s->jet(std::vector<double>{0.5, 0.1})).A_norm2;
  CHECK(a12 == doctest::Approx(1.7654403475576343563).epsilon(1e-13));
  CHECK(a34 == doctest::Approx(1.5319614663519098204).epsilon(1e-13));
  CHECK(g2.A_norm2 == doctest::Approx(a12 + a34).epsilon(1e-13));
  CHECK(flatness_defect(g2.R_perp) <= 1e-10);
}

TEST_CASE("omega minor index checks") {
  Frames fr = build_frames(flat_jet(2, 2, std::vector<double>(4, 0.0)));
  CHECK(compute_omega_minor(fr, 0, 1, 0, 1) == 0.0);
  CHECK_THROWS_AS(compute_omega_minor(fr, 0, 1, 1, 0), std::out_of_range);
  CHECK_THROWS_AS(compute_omega_minor(fr, 2, 1, 0, 1), std::out_of_range);
  CHECK_THROWS_AS(compute_omega_minor(fr, 0, 1, 0, 2), std::out_of_range);
}

TEST_CASE("holomorphic z^2: non-flat normal bundle") {
  auto map = make_holomorphic({0.0, 0.0, 1.0});
  PointGeometry g = compute_point_geometry(map->jet(std::vector<double>{1.0, 0.0}));
  CHECK(g.R_at(0, 1, 0, 1) == doctest::Approx(0.064).epsilon(1e-13));
  CHECK(frob(g.R_perp) == doctest::Approx(0.128).epsilon(1e-13));
  CHECK(flatness_defect(g.R_perp) == doctest::Approx(0.064).epsilon(1e-13));
  CHECK(g.A_norm2 == doctest::Approx(0.128).epsilon(1e-13));
  PointGeometry g2 = compute_point_geometry(map->jet(std::vector<double>{0.3, 0.4}));
  CHECK(g2.R_at(0, 1, 0, 1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(g2.A_norm2 == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(g2.star_omega == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(g2.mean_curvature_norm() < 1e-13);
}

TEST_CASE("paraboloid control has mean curvature") {
  PointGeometry g = compute_point_geometry(make_paraboloid_control()->jet(std::vector<double>{0.3, 0.1}));
  CHECK(g.H[0] == doctest::Approx(2.8011651775408764849).epsilon(1e-13));
  CHECK(g.H[1] == doctest::Approx(-0.18749264340172895558).epsilon(1e-13));
  CHECK(g.mean_curvature_norm() == doctest::Approx(2.8074329632597423741).epsilon(1e-13));
}

TEST_CASE("lawson-osserman cone: minimal, non-flat, constant star omega") {
  auto map = make_lawson_osserman();
  PointGeometry g = compute_point_geometry(map->jet(std::vector<double>{0.5, 0.5, 0.5, 0.5}));
  CHECK(flatness_defect(g.R_perp) == doctest::Approx(0.24826498353408667501).epsilon(1e-12));
  CHECK(g.A_norm2 == doctest::Approx(25.0 / 18.0).epsilon(1e-12));
  CHECK(g.star_omega == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  CHECK(g.mean_curvature_norm() < 1e-11);
  PointGeometry g2 = compute_point_geometry(map->jet(std::vector<double>{0.7, -0.2, 0.4, 0.3}));
  CHECK(flatness_defect(g2.R_perp) == doctest::Approx(0.37724708569643992989).epsilon(1e-12));
  CHECK(g2.A_norm2 == doctest::Approx(1.7806267806267806268).epsilon(1e-12));
  CHECK(g2.star_omega == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
  CHECK(g2.mean_curvature_norm() < 1e-11);
}

TEST_CASE("properties over random jets") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4, m = 1 + (trial / 4) % 3;
    JetAtPoint jet = random_jet(rng, n, m);
    PointGeometry geo = compute_point_geometry(jet);
    check_frames_orthonormal(geo.frames);
    CHECK(std::abs(compute_star_omega(jet) - 1.0 / geo.sqrt_g) <= 1e-12);
    CHECK(std::abs(compute_projection_jacobian(geo.frames) - geo.star_omega) <= 1e-12);
    CHECK(geo.star_omega > 0.0);
    CHECK(geo.star_omega <= 1.0);
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          CHECK(geo.h_at(a, i, j) == geo.h_at(a, j, i));
          for (int b = 0; b < m; ++b) {
            CHECK(geo.R_at(a, b, i, j) == -geo.R_at(b, a, i, j));
            CHECK(geo.R_at(a, b, i, j) == -geo.R_at(a, b, j, i));
          }
        }
    // Tangent vectors span the graph tangent space: each X_i lies in the span.
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a) {
        double s = geo.frames.normal_vector(a)[i];
        for (int b = 0; b < m; ++b) s += jet.first(b, i) * geo.frames.normal_vector(a)[n + b];
        CHECK(std::abs(s) <= 1e-12);
      }
    if (m == 1) CHECK(flatness_defect(geo.R_perp) == 0.0);
  }
}

TEST_CASE("frame-choice independence") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 3, m = 2 + trial % 2;
    JetAtPoint jet = random_jet(rng, n, m);
    PointGeometry geo = compute_point_geometry(jet);
    const double r_frob = frob(geo.R_perp), hh = geo.mean_curvature_norm();

    // Re-mix the normal frame by a constant orthogonal matrix.
    auto q = random_orthogonal(rng, m);
    std::vector<double> h2(geo.h.size(), 0.0);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int k = 0; k < n * n; ++k) h2[a * n * n + k] += q[a * m + b] * geo.h[b * n * n + k];
    auto r2 = compute_normal_curvature(m, n, h2);
    double a2 = 0.0, h2n = 0.0;
    for (double v : h2) a2 += v * v;
    for (int a = 0; a < m; ++a) {
      double t = 0.0;
      for (int i = 0; i < n; ++i) t += h2[(a * n + i) * n + i];
      h2n += t * t;
    }
    CHECK(a2 == doctest::Approx(geo.A_norm2).epsilon(1e-10));
    CHECK(frob(r2) == doctest::Approx(r_frob).epsilon(1e-10));
    CHECK(std::sqrt(h2n) == doctest::Approx(hh).epsilon(1e-10));

    // Reverse the coordinate order (changes the Gram-Schmidt order).
    JetAtPoint rev = jet;
    for (int b = 0; b < m; ++b)
      for (int i = 0; i < n; ++i) {
        rev.df[b * n + i] = jet.first(b, n - 1 - i);
        for (int j = 0; j < n; ++j) rev.d2f[(b * n + i) * n + j] = jet.second(b, n - 1 - i, n - 1 - j);
      }
    PointGeometry gr = compute_point_geometry(rev);
    CHECK(gr.A_norm2 == doctest::Approx(geo.A_norm2).epsilon(1e-10));
    CHECK(frob(gr.R_perp) == doctest::Approx(r_frob).epsilon(1e-10));
    CHECK(gr.mean_curvature_norm() == doctest::Approx(hh).epsilon(1e-10));
    CHECK(gr.star_omega == doctest::Approx(geo.star_omega).epsilon(1e-12));
  }
}

TEST_CASE("flat normal curvature iff commuting shape operators") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 3, m = 2 + trial % 2;
    auto q = random_orthogonal(rng, n);
    std::vector<double> h(m * n * n, 0.0);
    // A_a = Q^T diag(d_a) Q commute for all a.
    for (int a = 0; a < m; ++a) {
      std::vector<double> d(n);
      for (double& v : d) v = nd(rng);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) h[(a * n + i) * n + j] += q[k * n + i] * d[k] * q[k * n + j];
    }
    CHECK(flatness_defect(compute_normal_curvature(m, n, h)) <= 1e-10);

    // Generic symmetric matrices: R = 0 exactly when the commutators vanish.
    std::vector<double> hg(m * n * n);
    for (int a = 0; a < m; ++a)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) hg[(a * n + i) * n + j] = hg[(a * n + j) * n + i] = nd(rng);
    auto r = compute_normal_curvature(m, n, hg);
    double comm = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double c = 0.0;
            for (int k = 0; k < n; ++k) c += hg[(a * n + i) * n + k] * hg[(b * n + k) * n + j] - hg[(b * n + i) * n + k] * hg[(a * n + k) * n + j];
            comm = std::max(comm, std::abs(c));
            CHECK(std::abs(c - r[((a * m + b) * n + i) * n + j]) <= 1e-12);
          }
    CHECK(comm > 1e-3);
  }
}

TEST_CASE("jet validation") {
  JetAtPoint jet = flat_jet(2, 1, {0.1, 0.2}, {1.0, 0.5, 0.4, 1.0});
  CHECK_THROWS_AS(jet.validate(), InvalidInput);
  jet.d2f[2] = 0.5;
  CHECK_NOTHROW(jet.validate());
  jet.df[0] = std::nan("");
  CHECK_THROWS_AS(jet.validate(), InvalidInput);
}
