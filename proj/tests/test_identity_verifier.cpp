#include <cmath>

#include "doctest.h"
#include "mingraph/errors.hpp"
#include "mingraph/example_catalog.hpp"
#include "mingraph/identity_verifier.hpp"

using namespace mingraph;

namespace {

GeometryOptions opts(Mode mode) {
  GeometryOptions o;
  o.mode = mode;
  return o;
}

GridChart lo_box(int count) { return GridChart({0.6, 0.6, 0.6, 0.6}, {1.0, 1.0, 1.0, 1.0}, {count, count, count, count}); }

double nodewise_gap(const IdentityReport& a, const IdentityReport& b) {
  double d = 0.0;
  for (std::size_t p = 0; p < a.residual.chart.size(); ++p) {
    REQUIRE(a.residual.valid[p] == b.residual.valid[p]);
    if (a.residual.valid[p]) d = std::max(d, std::abs(a.residual.at(p) - b.residual.at(p)));
  }
  return d;
}

}  // namespace

TEST_CASE("linear graphs pass every check trivially") {
  GeometryField geo(make_linear(2, 2, {1.0, 0.5, -0.3, 2.0}), GridChart::cube(2, 1.0, 17), opts(Mode::analytic));
  for (const IdentityReport& r : verify_all(geo)) {
    CAPTURE(r.identity_id);
    CHECK(r.valid);
    CHECK(r.pass);
    CHECK(r.max_abs == 0.0);
  }
  IdentityReport k = check_kato(geo);
  CHECK(k.nodes_evaluated == 0);
  CHECK(k.note.find("vacuous") != std::string::npos);
}

TEST_CASE("Delta *Omega identities") {
  SUBCASE("scherk product: flat, R-term zero") {
    GeometryField geo(make_scherk_product(), GridChart::cube(4, 1.0, 7), opts(Mode::analytic));
    IdentityReport full = check_delta_star_omega_full(geo), anti = check_delta_star_omega_antisym(geo);
    CHECK(full.pass);
    CHECK(full.max_abs <= 1e-7);
    CHECK(anti.extras.at("r_term_max") <= 1e-10);
    CHECK(anti.extras.at("flat_part_max") <= 1e-7);
    CHECK(nodewise_gap(full, anti) <= 1e-10);
  }
  SUBCASE("Lawson-Osserman cone: the flat part alone fails, the full identity holds") {
    GeometryField geo(make_lawson_osserman(), lo_box(7), opts(Mode::analytic));
    IdentityReport full = check_delta_star_omega_full(geo), anti = check_delta_star_omega_antisym(geo);
    CHECK(full.max_abs <= 1e-4);
    CHECK(anti.max_abs <= 1e-4);
    CHECK(anti.extras.at("flat_part_max") >= 1e-3);
    CHECK(anti.extras.at("r_term_max") > 1e-3);
    CHECK(nodewise_gap(full, anti) <= 1e-10);
    // *Omega is constant on the cone, so Delta *Omega = 0 and the flat part is |A|^2 / 9.
    std::size_t mid = geo.chart().size() / 2;
    CHECK(anti.residual.at(mid) == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("non-flat holomorphic cubic") {
    GeometryField geo(make_holomorphic({{0, 0}, {0.5, 0}, {0.3, -0.2}, {0.4, 0.1}}), GridChart::cube(2, 0.8, 17),
                      opts(Mode::analytic));
    CHECK(max_flatness_defect(geo) > 0.1);
    CHECK(check_delta_star_omega_full(geo).max_abs < 1e-9);
  }
}

TEST_CASE("Simons identity") {
  for (auto map : {make_scherk(), make_holomorphic({{0, 0}, {0, 0}, {1, 0}})}) {
    GeometryField geo(map, GridChart::cube(2, 1.0, 33), opts(Mode::analytic));
    IdentityReport r = check_simons(geo);
    CAPTURE(map->name());
    CHECK(r.pass);
    CHECK(r.max_abs <= 1e-6);
  }
  GridChart chart = GridChart::cube(2, 1.0, 17);
  auto sampled = std::make_shared<SampledGraph>(chart, 1, sample_values(*make_scherk(), chart).values);
  GeometryField geo(sampled, chart, opts(Mode::sampled));
  CHECK_THROWS_AS(check_simons(geo), PreconditionError);
}

TEST_CASE("Kato inequality on flat examples") {
  GeometryField s(make_scherk(), GridChart::cube(2, 1.0, 33), opts(Mode::analytic));
  GeometryField sp(make_scherk_product(), GridChart::cube(4, 1.0, 7), opts(Mode::analytic));
  IdentityReport a = check_kato(s), b = check_kato(sp);
  CHECK(a.pass);
  CHECK(b.pass);
  CHECK(a.nodes_evaluated > 0);
  CHECK(a.extras.at("constant_2_over_n") == 1.0);
  CHECK(b.extras.at("constant_2_over_n") == 0.5);
  for (std::size_t p = 0; p < s.chart().size(); ++p)
    if (a.margin.valid[p]) CHECK(a.margin.at(p) >= -1e-8 * std::max(1.0, covariant_derivative_A(s).grad_A_norm2.at(p)));
  GeometryField lo(make_lawson_osserman(), lo_box(5), opts(Mode::analytic));
  CHECK_THROWS_AS(check_kato(lo), PreconditionError);
}

TEST_CASE("log *Omega identity") {
  GeometryField s(make_scherk(), GridChart::cube(2, 1.0, 33), opts(Mode::analytic));
  GeometryField sp(make_scherk_product(), GridChart::cube(4, 1.0, 7), opts(Mode::analytic));
  CHECK(check_log_star_omega(s).max_abs <= 1e-6);
  CHECK(check_log_star_omega(sp).max_abs <= 1e-6);
  GeometryField z2(make_holomorphic({{0, 0}, {0, 0}, {1, 0}}), GridChart::cube(2, 1.0, 9), opts(Mode::analytic));
  CHECK_THROWS_AS(check_log_star_omega(z2), PreconditionError);
}

TEST_CASE("curvature-power inequalities") {
  GeometryField s(make_scherk(), GridChart::cube(2, 1.0, 33), opts(Mode::analytic));
  GeometryField sp(make_scherk_product(), GridChart::cube(4, 1.0, 7), opts(Mode::analytic));
  for (const IdentityReport& r : {check_subharmonic_pp(s, 2), check_subharmonic_pp(s, 3), check_subharmonic_pp(sp, 3),
                                  check_subharmonic_pp(sp, 3, 2.0), check_drift_inequality(s, 3),
                                  check_drift_inequality(sp, 3)}) {
    CAPTURE(r.identity_id);
    CHECK(r.pass);
    CHECK(r.extras.at("min_margin") >= -1e-6);
    CHECK(r.nodes_evaluated > 0);
  }
  CHECK_THROWS_AS(check_subharmonic_pp(s, 1.5), InvalidInput);
  CHECK_THROWS_AS(check_subharmonic_pp(sp, 2, 9.0), InvalidInput);
  CHECK_THROWS_AS(check_drift_inequality(s, 2), InvalidInput);
  GeometryField z2(make_holomorphic({{0, 0}, {0, 0}, {1, 0}}), GridChart::cube(2, 1.0, 9), opts(Mode::analytic));
  CHECK_THROWS_AS(check_drift_inequality(z2, 3), PreconditionError);
}

TEST_CASE("minimality gate marks reports invalid") {
  GeometryField geo(make_paraboloid_control(), GridChart::cube(2, 1.0, 17), opts(Mode::analytic));
  IdentityReport r = check_simons(geo);
  CHECK_FALSE(r.valid);
  CHECK_FALSE(r.pass);
  CHECK(r.note.find("not minimal") != std::string::npos);
  auto all = verify_all(geo);
  CHECK(all.size() == 7);
  for (const auto& x : all) CHECK_FALSE(x.pass);
}

TEST_CASE("sampled residuals converge at second order") {
  GeometryOptions o = opts(Mode::sampled);
  std::vector<GridChart> charts = {GridChart::cube(2, 1.0, 33), GridChart::cube(2, 1.0, 65), GridChart::cube(2, 1.0, 129)};
  auto simons = refinement_study([](const GeometryField& g) { return check_simons(g); }, make_scherk(), charts, o, 0.2);
  CHECK(simons.fit.slope >= 1.9);
  auto logw =
      refinement_study([](const GeometryField& g) { return check_log_star_omega(g); }, make_scherk(), charts, o, 0.2);
  CHECK(logw.fit.slope >= 1.9);
  std::vector<GridChart> lo = {lo_box(9), lo_box(13), lo_box(17)};
  auto full = refinement_study([](const GeometryField& g) { return check_delta_star_omega_full(g); },
                               make_lawson_osserman(), lo, o, 0.25);
  CHECK(full.fit.slope >= 1.9);
  CHECK(full.max_abs.back() <= 1e-4);
  CHECK_THROWS_AS(refinement_study([](const GeometryField& g) { return check_simons(g); }, make_scherk(), {charts[0]}, o),
                  InvalidInput);
}

TEST_CASE("growth ratio of sqrt(det g) against the ambient radius") {
  std::vector<double> radii = {1.0, 2.0, 4.0, 8.0};
  GrowthSeries flat = eh_growth_ratio(*make_linear(1, 2, {0.0, 0.0}), radii);
  for (std::size_t i = 0; i < radii.size(); ++i) CHECK(flat.ratio[i] == doctest::Approx(1.0 / radii[i]).epsilon(1e-12));
  CHECK(flat.trend == "decreasing");
  GrowthSeries lin = eh_growth_ratio(*make_linear(2, 2, {1.0, 2.0, 0.0, -1.0}), radii);
  for (std::size_t i = 1; i < radii.size(); ++i) CHECK(lin.ratio[i] * radii[i] == doctest::Approx(lin.ratio[0] * radii[0]));
  // Cone: sqrt(det g) is homogeneous of degree 0, so the ratio decays like c/R.
  GrowthSeries lo = eh_growth_ratio(*make_lawson_osserman(0.5, 2.0), {0.6, 1.0, 1.9});
  CHECK(lo.trend == "decreasing");
  CHECK(lo.ratio[0] * 0.6 == doctest::Approx(lo.ratio[2] * 1.9).epsilon(1e-9));
  CHECK_THROWS_AS(eh_growth_ratio(*make_lawson_osserman(0.5, 2.0), {3.0}), CoverageError);
}
