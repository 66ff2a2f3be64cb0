#include "mingraph/identity_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mingraph/errors.hpp"
#include "mingraph/parallel.hpp"

namespace mingraph {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double max_spacing(const GridChart& chart) {
  double h = 0.0;
  for (int a = 0; a < chart.dim(); ++a) h = std::max(h, chart.spacing(a));
  return h;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

IdentityReport start(const std::string& id, const GeometryField& geo, const VerifyOptions& opts) {
  IdentityReport r;
  r.identity_id = id;
  r.residual = Field(geo.chart(), 1, kNaN);
  std::fill(r.residual.valid.begin(), r.residual.valid.end(), 0);
  if (opts.tolerance > 0.0)
    r.tolerance = opts.tolerance;
  else
    r.tolerance = geo.mode() == Mode::analytic ? 1e-6 : opts.sampled_factor * std::pow(max_spacing(geo.chart()), 2);
  auto [res, gate] = minimality(geo, opts);
  r.extras["mss_residual_max"] = res;
  if (!(res <= gate)) {
    r.valid = false;
    r.note = "input is not minimal: max |mss residual| " + fmt(res) + " exceeds " + fmt(gate);
  }
  return r;
}

void finish(IdentityReport& r, const GeometryField& geo) {
  double mx = 0.0;
  std::size_t count = 0;
  Field sq(geo.chart(), 1, 0.0);
  sq.valid = r.residual.valid;
  for (std::size_t p = 0; p < geo.chart().size(); ++p) {
    if (!r.residual.valid[p]) continue;
    const double v = r.residual.at(p);
    if (!std::isfinite(v)) {
      r.residual.valid[p] = 0;
      sq.valid[p] = 0;
      continue;
    }
    mx = std::max(mx, std::abs(v));
    sq.at(p) = v * v;
    ++count;
  }
  r.max_abs = mx;
  r.nodes_evaluated = count;
  r.l2_norm = std::sqrt(integrate(sq, geo));
  r.pass = r.valid && r.max_abs <= r.tolerance;
}

void require_flat(const GeometryField& geo, const VerifyOptions& opts, const std::string& what) {
  const double d = max_flatness_defect(geo);
  if (!(d <= opts.flat_tolerance))
    throw PreconditionError(what + " holds only for a flat normal bundle (commuting shape operators); max flatness defect " +
                            fmt(d) + " exceeds " + fmt(opts.flat_tolerance));
}

// Inequality lhs >= rhs with per-node skip and scale.
struct InequalityTerms {
  Field lhs;
  std::vector<double> rhs, scale;
  std::vector<std::uint8_t> use;
};

void finish_inequality(IdentityReport& r, const GeometryField& geo, const InequalityTerms& t, double abs_tol,
                       double rel) {
  const std::size_t N = geo.chart().size();
  r.margin = Field(geo.chart(), 1, kNaN);
  std::fill(r.margin.valid.begin(), r.margin.valid.end(), 0);
  r.tolerance = abs_tol;
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < N; ++p) {
    if (!t.use[p] || !t.lhs.valid[p]) continue;
    const double mg = t.lhs.at(p) - t.rhs[p];
    if (!std::isfinite(mg)) continue;
    r.margin.at(p) = mg;
    r.margin.valid[p] = 1;
    r.residual.at(p) = std::max(0.0, -mg - rel * t.scale[p]);
    r.residual.valid[p] = 1;
    min_margin = std::min(min_margin, mg);
  }
  finish(r, geo);
  r.extras["min_margin"] = r.nodes_evaluated ? min_margin : 0.0;
  if (r.nodes_evaluated == 0 && r.note.empty()) r.note = "vacuous: no node above the |A| floor";
}

}  // namespace

double max_flatness_defect(const GeometryField& geo) {
  double d = 0.0;
  for (std::size_t p = 0; p < geo.chart().size(); ++p)
    if (geo.interior(p)) d = std::max(d, flatness_defect(geo.at(p).R_perp));
  return d;
}

std::pair<double, double> minimality(const GeometryField& geo, const VerifyOptions& opts) {
  const Field& r = geo.mss_residual();
  double mx = 0.0;
  for (std::size_t p = 0; p < geo.chart().size(); ++p) {
    if (!geo.interior(p) || !r.valid[p]) continue;
    for (int c = 0; c < r.components; ++c) mx = std::max(mx, std::abs(r.at(p, c)));
  }
  const double gate = geo.mode() == Mode::analytic ? opts.minimal_tolerance
                                                   : opts.minimal_factor_sampled * std::pow(max_spacing(geo.chart()), 2);
  return {mx, gate};
}

namespace {

// -2 sum_k sum_{a,b} sum_{i<j} Omega_abij h_aik h_bjk and -2 sum_{a<b,i<j} Omega_abij R_abij, with
// nu_a in slot i and nu_b in slot j of Omega_abij.
std::pair<double, double> omega_terms(const PointGeometry& G) {
  const int n = G.n, m = G.m;
  double full = 0.0, rterm = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      if (a == b) continue;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double om = compute_omega_minor(G.frames, a, b, i, j);
          double hh = 0.0;
          for (int k = 0; k < n; ++k) hh += G.h_at(a, i, k) * G.h_at(b, j, k);
          full += om * hh;
          if (a < b) rterm += om * G.R_at(a, b, i, j);
        }
    }
  return {-2.0 * full, -2.0 * rterm};
}

}  // namespace

IdentityReport check_delta_star_omega_full(const GeometryField& geo, const VerifyOptions& opts) {
  IdentityReport r = start("delta_star_omega_full", geo, opts);
  Field lap = geo.laplacian(expr_star_omega());
  parallel_for(geo.chart().size(), [&](std::size_t p) {
    if (!geo.interior(p) || !lap.valid[p]) return;
    const PointGeometry& G = geo.at(p);
    r.residual.at(p) = lap.at(p) + G.star_omega * G.A_norm2 + omega_terms(G).first;
    r.residual.valid[p] = 1;
  });
  finish(r, geo);
  return r;
}

IdentityReport check_delta_star_omega_antisym(const GeometryField& geo, const VerifyOptions& opts) {
  IdentityReport r = start("delta_star_omega_antisym", geo, opts);
  Field lap = geo.laplacian(expr_star_omega());
  std::vector<double> flat(geo.chart().size(), 0.0), rt(geo.chart().size(), 0.0);
  parallel_for(geo.chart().size(), [&](std::size_t p) {
    if (!geo.interior(p) || !lap.valid[p]) return;
    const PointGeometry& G = geo.at(p);
    flat[p] = lap.at(p) + G.star_omega * G.A_norm2;
    rt[p] = omega_terms(G).second;
    r.residual.at(p) = flat[p] + rt[p];
    r.residual.valid[p] = 1;
  });
  finish(r, geo);
  double fm = 0.0, rm = 0.0;
  for (std::size_t p = 0; p < geo.chart().size(); ++p) {
    if (!r.residual.valid[p]) continue;
    fm = std::max(fm, std::abs(flat[p]));
    rm = std::max(rm, std::abs(rt[p]));
  }
  r.extras["flat_part_max"] = fm;
  r.extras["r_term_max"] = rm;
  return r;
}

IdentityReport check_simons(const GeometryField& geo, const VerifyOptions& opts) {
  if (!geo.map().analytic())
    throw PreconditionError("simons: the identity involves fourth derivatives of f; '" + geo.map().name() +
                            "' has sampled values only");
  if (!geo.has_derivatives()) throw PreconditionError("simons: geometry was built without derivative data");
  IdentityReport r = start("simons", geo, opts);
  Field lap = geo.laplacian(expr_A_norm2());
  const int n = geo.n(), m = geo.m();
  parallel_for(geo.chart().size(), [&](std::size_t p) {
    if (!geo.interior(p) || !lap.valid[p]) return;
    const PointGeometry& G = geo.at(p);
    double quart = 0.0, r2 = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double ab = 0.0;
        for (int k = 0; k < n * n; ++k) ab += G.h[a * n * n + k] * G.h[b * n * n + k];
        quart += ab * ab;
      }
    for (double v : G.R_perp) r2 += v * v;
    r.residual.at(p) = lap.at(p) - 2.0 * geo.grad_A_norm2(p) + 2.0 * quart + 2.0 * r2;
    r.residual.valid[p] = 1;
  });
  finish(r, geo);
  return r;
}

IdentityReport check_kato(const GeometryField& geo, const VerifyOptions& opts) {
  require_flat(geo, opts, "kato");
  IdentityReport r = start("kato", geo, opts);
  CovariantDerivativeA cov = covariant_derivative_A(geo);
  const std::size_t N = geo.chart().size();
  const double c = 1.0 + 2.0 / geo.n();
  InequalityTerms t{cov.grad_A_norm2, std::vector<double>(N, 0.0), std::vector<double>(N, 0.0),
                    std::vector<std::uint8_t>(N, 0)};
  for (std::size_t p = 0; p < N; ++p) {
    if (!geo.interior(p) || !cov.grad_abs_A2.valid[p]) continue;
    const double ga = cov.grad_abs_A2.at(p);
    if (std::sqrt(geo.at(p).A_norm2) < opts.a_floor || std::sqrt(ga) < opts.a_floor) continue;
    t.rhs[p] = c * ga;
    t.scale[p] = cov.grad_A_norm2.at(p);
    t.use[p] = 1;
  }
  finish_inequality(r, geo, t, 0.0, opts.relative_slack);
  r.extras["constant_2_over_n"] = 2.0 / geo.n();
  return r;
}

IdentityReport check_log_star_omega(const GeometryField& geo, const VerifyOptions& opts) {
  require_flat(geo, opts, "log_star_omega");
  IdentityReport r = start("log_star_omega", geo, opts);
  ScalarExpr e = [](const Taylor&, const Taylor& w) { return log(w); };
  Field lap = geo.laplacian(e), grad = geo.gradient_norm2(e);
  parallel_for(geo.chart().size(), [&](std::size_t p) {
    if (!geo.interior(p) || !lap.valid[p] || !grad.valid[p]) return;
    r.residual.at(p) = lap.at(p) + geo.at(p).A_norm2 + grad.at(p);
    r.residual.valid[p] = 1;
  });
  finish(r, geo);
  return r;
}

namespace {

IdentityReport power_inequality(const GeometryField& geo, const VerifyOptions& opts, const std::string& id, double pa,
                                double pw, double rhs_coeff, double rhs_pa) {
  IdentityReport r = start(id, geo, opts);
  // lhs = Delta(|A|^pa *Omega^pw), rhs = rhs_coeff |A|^rhs_pa *Omega^pw.
  ScalarExpr e = [pa, pw](const Taylor& s, const Taylor& w) { return pow(s, 0.5 * pa) * pow(w, pw); };
  const std::size_t N = geo.chart().size();
  std::vector<std::uint8_t> use(N, 0);
  for (std::size_t p = 0; p < N; ++p) use[p] = geo.interior(p) && std::sqrt(geo.at(p).A_norm2) >= opts.a_floor;
  InequalityTerms t{geo.laplacian(e), std::vector<double>(N, 0.0), std::vector<double>(N, 0.0), use};
  for (std::size_t p = 0; p < N; ++p) {
    if (!use[p]) continue;
    const PointGeometry& G = geo.at(p);
    t.rhs[p] = rhs_coeff * std::pow(G.A_norm2, 0.5 * rhs_pa) * std::pow(G.star_omega, pw);
    t.scale[p] = std::abs(t.lhs.at(p)) + std::abs(t.rhs[p]);
  }
  finish_inequality(r, geo, t, opts.inequality_tolerance, opts.relative_slack);
  return r;
}

}  // namespace

IdentityReport check_subharmonic_pp(const GeometryField& geo, double p, std::optional<double> q,
                                    const VerifyOptions& opts) {
  const int n = geo.n();
  const double qq = q.value_or(p);
  if (qq == p) {
    if (!(p >= std::max(2.0, 0.5 * (n - 1))))
      throw InvalidInput("subharmonic: p = " + fmt(p) + " must be at least max(2, (n-1)/2)");
  } else {
    if (!(p >= 2.0)) throw InvalidInput("subharmonic: p = " + fmt(p) + " must be at least 2");
    if (!(qq * (1.0 - 2.0 / n) <= p - 1.0 + 2.0 / n))
      throw InvalidInput("subharmonic: q = " + fmt(qq) + " is outside the window q (1 - 2/n) <= p - 1 + 2/n");
  }
  require_flat(geo, opts, "subharmonic");
  IdentityReport r = power_inequality(geo, opts, qq == p ? "subharmonic_pp" : "subharmonic_pq", p, -qq, qq - p, p + 2);
  r.extras["p"] = p;
  r.extras["q"] = qq;
  return r;
}

IdentityReport check_drift_inequality(const GeometryField& geo, double p, const VerifyOptions& opts) {
  const int n = geo.n();
  if (!(p >= std::max(3.0, n - 1.0)))
    throw InvalidInput("drift: p = " + fmt(p) + " must be at least max(3, n-1)");
  require_flat(geo, opts, "drift");
  IdentityReport r = power_inequality(geo, opts, "drift", p - 1.0, -p, 1.0, p + 1.0);
  r.extras["p"] = p;
  return r;
}

std::vector<IdentityReport> verify_all(const GeometryField& geo, const VerifyOptions& opts) {
  const std::vector<std::pair<std::string, IdentityCheck>> checks = {
      {"delta_star_omega_full", [&](const GeometryField& g) { return check_delta_star_omega_full(g, opts); }},
      {"delta_star_omega_antisym", [&](const GeometryField& g) { return check_delta_star_omega_antisym(g, opts); }},
      {"simons", [&](const GeometryField& g) { return check_simons(g, opts); }},
      {"kato", [&](const GeometryField& g) { return check_kato(g, opts); }},
      {"log_star_omega", [&](const GeometryField& g) { return check_log_star_omega(g, opts); }},
      {"subharmonic_pp", [&](const GeometryField& g) { return check_subharmonic_pp(g, opts.p, std::nullopt, opts); }},
      {"drift", [&](const GeometryField& g) { return check_drift_inequality(g, opts.p, opts); }},
  };
  std::vector<IdentityReport> out;
  for (const auto& [id, check] : checks) {
    try {
      out.push_back(check(geo));
    } catch (const Error& e) {
      if (!dynamic_cast<const PreconditionError*>(&e) && !dynamic_cast<const InvalidInput*>(&e)) throw;
      IdentityReport r;
      r.identity_id = id;
      r.valid = false;
      r.note = std::string("skipped: ") + e.what();
      out.push_back(std::move(r));
    }
  }
  return out;
}

namespace {

void check_fraction(double inner_fraction, const char* what) {
  if (!(inner_fraction >= 0.0 && inner_fraction < 0.5))
    throw InvalidInput(std::string(what) + ": inner_fraction must be in [0, 0.5)");
}

// Box of `chart` shrunk by inner_fraction of its width on each side.
std::pair<std::vector<double>, std::vector<double>> shrunk_box(const GridChart& chart, double inner_fraction) {
  const int n = chart.dim();
  std::vector<double> lo(n), hi(n);
  for (int a = 0; a < n; ++a) {
    const double w = chart.hi()[a] - chart.lo()[a];
    lo[a] = chart.lo()[a] + inner_fraction * w - 1e-12;
    hi[a] = chart.hi()[a] - inner_fraction * w + 1e-12;
  }
  return {lo, hi};
}

double max_in_box(const Field& residual, const std::vector<double>& lo, const std::vector<double>& hi) {
  const GridChart& chart = residual.chart;
  double mx = 0.0;
  for (std::size_t p = 0; p < chart.size(); ++p) {
    if (!residual.valid[p]) continue;
    bool inside = true;
    for (int a = 0; a < chart.dim(); ++a) inside = inside && chart.coord(p, a) >= lo[a] && chart.coord(p, a) <= hi[a];
    if (inside)
      for (int c = 0; c < residual.components; ++c) mx = std::max(mx, std::abs(residual.at(p, c)));
  }
  return mx;
}

}  // namespace

double inner_max_abs(const Field& residual, double inner_fraction) {
  check_fraction(inner_fraction, "inner_max_abs");
  auto [lo, hi] = shrunk_box(residual.chart, inner_fraction);
  return max_in_box(residual, lo, hi);
}

RefinementStudy refinement_study(const IdentityCheck& check, const GraphMapPtr& map, const std::vector<GridChart>& charts,
                                 const GeometryOptions& options, double inner_fraction) {
  if (charts.size() < 2) throw InvalidInput("refinement_study: need at least two charts");
  check_fraction(inner_fraction, "refinement_study");
  auto [lo, hi] = shrunk_box(charts.front(), inner_fraction);
  RefinementStudy s;
  for (const GridChart& chart : charts) {
    GeometryField geo(map, chart, options);
    IdentityReport r = check(geo);
    s.h.push_back(max_spacing(chart));
    s.max_abs.push_back(max_in_box(r.residual, lo, hi));
  }
  s.fit = fit_loglog(s.h, s.max_abs);
  return s;
}

GrowthSeries eh_growth_ratio(const GraphMap& map, const std::vector<double>& radii, int samples_per_axis) {
  if (!map.analytic()) throw PreconditionError("eh_growth_ratio: needs an analytic map");
  if (radii.empty()) throw InvalidInput("eh_growth_ratio: no radii");
  if (samples_per_axis < 1) throw InvalidInput("eh_growth_ratio: samples_per_axis must be positive");
  const int n = map.domain_dim(), m = map.codim(), k = samples_per_axis;
  // Directions: lattice points on the surface of [-1, 1]^n, normalized.
  std::vector<std::vector<double>> dirs;
  std::vector<int> idx(n, 0);
  while (true) {
    bool face = false;
    std::vector<double> d(n);
    double len = 0.0;
    for (int a = 0; a < n; ++a) {
      face = face || idx[a] == 0 || idx[a] == k;
      d[a] = -1.0 + 2.0 * idx[a] / k;
      len += d[a] * d[a];
    }
    if (face) {
      for (double& v : d) v /= std::sqrt(len);
      dirs.push_back(std::move(d));
    }
    int a = n - 1;
    while (a >= 0 && idx[a] == k) idx[a--] = 0;
    if (a < 0) break;
    ++idx[a];
  }
  GrowthSeries out;
  out.radii = radii;
  for (double R : radii) {
    if (!(R > 0.0)) throw InvalidInput("eh_growth_ratio: radii must be positive");
    std::vector<double> best(dirs.size(), 0.0);
    std::vector<std::uint8_t> outside(dirs.size(), 0);
    parallel_for(dirs.size(), [&](std::size_t t) {
      std::vector<double> x(n);
      for (int a = 0; a < n; ++a) x[a] = R * dirs[t][a];
      if (!map.in_domain(x)) {
        outside[t] = 1;
        return;
      }
      JetAtPoint jet = map.jet(x, 2);
      double r2 = R * R;
      for (int b = 0; b < m; ++b) r2 += jet.f[b] * jet.f[b];
      best[t] = compute_metric(jet).sqrt_g / std::sqrt(r2);
    });
    for (std::uint8_t o : outside)
      if (o) throw CoverageError("eh_growth_ratio: the sphere |x| = " + fmt(R) + " leaves the domain of " + map.name(), 0.0);
    out.ratio.push_back(*std::max_element(best.begin(), best.end()));
  }
  bool dec = true, inc = true;
  for (std::size_t i = 1; i < out.ratio.size(); ++i) {
    dec = dec && out.ratio[i] < out.ratio[i - 1];
    inc = inc && out.ratio[i] > out.ratio[i - 1];
  }
  out.trend = dec ? "decreasing" : inc ? "increasing" : "mixed";
  return out;
}

}  // namespace mingraph
