#include "mingraph/scaling_probe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "mingraph/errors.hpp"
#include "mingraph/parallel.hpp"

namespace mingraph {

namespace {

int default_nodes(int n) { return n <= 2 ? 129 : n == 3 ? 33 : 17; }

void check_p(double p, int n) {
  const double hi = 2.0 + std::sqrt(2.0 / n);
  if (!(p >= 2.0 && p < hi))
    throw InvalidInput("p = " + format_double(p) + " is outside [2, " + format_double(hi) + ")");
}

// Analytic maps get [-R, R]^n; sampled maps keep their own chart.
GridChart chart_for(const GraphMap& map, double R, int count) {
  if (const auto* s = dynamic_cast<const SampledGraph*>(&map)) return s->chart();
  return GridChart::cube(map.domain_dim(), R, count);
}

GeometryOptions geometry_options(const GraphMap& map, const ProbeOptions& o) {
  GeometryOptions g;
  g.mode = map.analytic() ? o.mode : Mode::sampled;
  g.derivatives = false;
  return g;
}

double domain_norm2(const GridChart& chart, std::size_t p) {
  double r2 = 0.0;
  for (int a = 0; a < chart.dim(); ++a) r2 += chart.coord(p, a) * chart.coord(p, a);
  return r2;
}

// Covered fraction of Sigma in the shell rho R <= r <= R: the ball part from
// ball_coverage, and invalid nodes with rho R <= |x| <= R counted as holes.
double shell_coverage(const GeometryField& geo, double R, double rho) {
  const GridChart& chart = geo.chart();
  std::size_t total = 0, holes = 0;
  const double hi = R * R, lo = rho * rho * R * R;
  for (std::size_t p = 0; p < chart.size(); ++p) {
    const double d2 = domain_norm2(chart, p);
    if (d2 > hi || d2 < lo) continue;
    ++total;
    holes += !geo.valid(p);
  }
  const double nodes = total ? 1.0 - static_cast<double>(holes) / static_cast<double>(total) : 1.0;
  return std::min(nodes, ball_coverage(geo, R));
}

void require_coverage(double coverage, double R, double min_coverage) {
  if (coverage < min_coverage)
    throw CoverageError("scaling probe: Sigma in B_R for R = " + format_double(R) + " is only " +
                            format_double(std::round(1000.0 * coverage) / 10.0) + "% covered by the chart",
                        coverage);
}

double sup_A2(const GeometryField& geo, double radius, double inner) {
  double best = 0.0;
  for (std::size_t p = 0; p < geo.chart().size(); ++p) {
    if (!geo.valid(p)) continue;
    const double d2 = geo.ambient_radius2(p);
    if (d2 > radius * radius || d2 < inner * inner) continue;
    best = std::max(best, geo.at(p).A_norm2);
  }
  return best;
}

void validate_radii(const std::vector<double>& radii) {
  if (radii.size() < 3) throw InvalidInput("scaling probe: at least three radii are required");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || !std::isfinite(radii[i])) throw InvalidInput("scaling probe: radii must be positive");
    if (i && !(radii[i] > radii[i - 1])) throw InvalidInput("scaling probe: radii must be strictly increasing");
  }
}

}  // namespace

ScalingProbeResult run_probe(const GraphMapPtr& map, double p, const std::vector<double>& radii,
                             const ProbeOptions& options) {
  if (!map) throw InvalidInput("run_probe: no map");
  const int n = map->domain_dim();
  check_p(p, n);
  validate_radii(radii);
  if (!(options.shell_fraction >= 0.0 && options.shell_fraction < 0.5))
    throw InvalidInput("run_probe: shell_fraction must lie in [0, 0.5)");
  const int count = options.nodes_per_axis > 0 ? options.nodes_per_axis : default_nodes(n);
  if (count < 5 || count % 2 == 0) throw InvalidInput("run_probe: nodes_per_axis must be odd and at least 5");
  const double rho = options.shell_fraction;
  const GeometryOptions gopt = geometry_options(*map, options);

  ScalingProbeResult out;
  out.radii = radii;
  out.p = p;
  out.shell_fraction = rho;
  out.nodes_per_axis = count;
  for (double R : radii) {
    GeometryField geo(map, chart_for(*map, R, count), gopt);
    const double coverage = shell_coverage(geo, R, rho);
    require_coverage(coverage, R, options.min_coverage);
    BallOptions ball;
    ball.inner_radius = rho * R;
    ball.min_coverage = 0.0;
    Field one(geo.chart(), 1, 1.0), a2p(geo.chart(), 1, 0.0);
    for (std::size_t q = 0; q < geo.chart().size(); ++q)
      if (geo.valid(q)) a2p.at(q) = std::pow(geo.at(q).A_norm2, p);
    out.vol.push_back(integrate_ball(one, geo, R, ball).value);
    ball.inner_radius = rho * R / 2.0;
    out.intA2p.push_back(integrate_ball(a2p, geo, R / 2.0, ball).value);
    const double sup = sup_A2(geo, R / 2.0, rho * R / 2.0);
    out.supA2.push_back(sup);
    double rich = sup;
    if (map->analytic()) {
      GeometryField coarse(map, chart_for(*map, R, (count - 1) / 2 + 1), gopt);
      rich = sup + (sup - sup_A2(coarse, R / 2.0, rho * R / 2.0)) / 3.0;
    }
    out.supA2_richardson.push_back(rich);
    out.coverage.push_back(coverage);
  }
  for (std::size_t i = 1; i < out.vol.size(); ++i) out.vol_increasing = out.vol_increasing && out.vol[i] > out.vol[i - 1];
  auto fit = [&](const std::string& key, const std::vector<double>& y) {
    if (std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0 && std::isfinite(v); }))
      out.fitted_slopes[key] = fit_loglog(radii, y);
  };
  fit("vol", out.vol);
  fit("intA2p", out.intA2p);
  fit("supA2", out.supA2);
  return out;
}

double cutoff_inequality_ratio(const GraphMapPtr& map, double p, double R, const ProbeOptions& options) {
  if (!map) throw InvalidInput("cutoff_inequality_ratio: no map");
  const int n = map->domain_dim(), m = map->codim();
  check_p(p, n);
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidInput("cutoff_inequality_ratio: R must be positive");
  const int count = options.nodes_per_axis > 0 ? options.nodes_per_axis : default_nodes(n);
  const double rho = options.shell_fraction;
  GeometryField geo(map, chart_for(*map, R, count), geometry_options(*map, options));
  require_coverage(shell_coverage(geo, R, rho), R, options.min_coverage);
  const GridChart& chart = geo.chart();
  std::vector<double> num(chart.size(), 0.0), den(chart.size(), 0.0);
  parallel_for(chart.size(), [&](std::size_t q) {
    if (!geo.valid(q)) return;
    const double r2 = geo.ambient_radius2(q);
    if (r2 > R * R || r2 < rho * rho * R * R) return;
    const double r = std::sqrt(r2);
    const PointGeometry& G = geo.at(q);
    const double phi = std::clamp(2.0 - 2.0 * r / R, 0.0, 1.0);
    num[q] = std::pow(G.A_norm2, p) * std::pow(phi, 2.0 * p) * G.sqrt_g;
    if (r <= R / 2.0) return;
    // d_i r = (x_i + sum_b f^b d_i f^b) / r, and |grad phi|^2 = (2/R)^2 g^ij d_i r d_j r.
    auto f = geo.f(q);
    auto df = geo.df(q);
    std::vector<double> dr(n);
    for (int i = 0; i < n; ++i) {
      double s = chart.coord(q, i);
      for (int b = 0; b < m; ++b) s += f[b] * df[b * n + i];
      dr[i] = s / r;
    }
    double g2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g2 += G.g_inv[i * n + j] * dr[i] * dr[j];
    g2 *= 4.0 / (R * R);
    den[q] = std::pow(g2, p) * G.sqrt_g;
  });
  const double top = pairwise_sum(num), bottom = pairwise_sum(den);
  if (top == 0.0) return 0.0;
  if (!(bottom > 0.0)) throw InvalidInput("cutoff_inequality_ratio: no grid node in the cutoff transition region");
  return top / bottom;
}

bool dimension_admissible(int n) { return n >= 1 && n < 4.0 + std::sqrt(8.0 / n); }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_probe_csv(const ScalingProbeResult& r, std::ostream& out) {
  out << "R,vol,intA2p,supA2,coverage\n";
  for (std::size_t i = 0; i < r.radii.size(); ++i)
    out << format_double(r.radii[i]) << ',' << format_double(r.vol[i]) << ',' << format_double(r.intA2p[i]) << ','
        << format_double(r.supA2[i]) << ',' << format_double(r.coverage[i]) << '\n';
}

}  // namespace mingraph
