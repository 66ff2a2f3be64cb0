#include "mingraph/graph_geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mingraph/detail/geometry_core.hpp"
#include "mingraph/errors.hpp"

namespace mingraph {

namespace {

constexpr double kCrossCheckTol = 1e-10;

void require_jet_shape(const JetAtPoint& jet) {
  if (jet.n < 1 || jet.m < 1) throw InvalidInput("JetAtPoint: dimensions must be positive");
  if (static_cast<int>(jet.df.size()) != jet.m * jet.n) throw InvalidInput("JetAtPoint: df has wrong size");
  for (double v : jet.df)
    if (!std::isfinite(v)) throw InvalidInput("JetAtPoint: non-finite first derivative");
}

}  // namespace

void JetAtPoint::validate() const {
  require_jet_shape(*this);
  if (static_cast<int>(x.size()) != n) throw InvalidInput("JetAtPoint: x has wrong size");
  if (static_cast<int>(f.size()) != m) throw InvalidInput("JetAtPoint: f has wrong size");
  if (static_cast<int>(d2f.size()) != m * n * n) throw InvalidInput("JetAtPoint: d2f has wrong size");
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidInput("JetAtPoint: non-finite point");
  for (double v : f)
    if (!std::isfinite(v)) throw InvalidInput("JetAtPoint: non-finite value");
  for (int b = 0; b < m; ++b)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = second(b, i, j);
        if (!std::isfinite(v)) throw InvalidInput("JetAtPoint: non-finite second derivative");
        if (v != second(b, j, i)) throw InvalidInput("JetAtPoint: second derivatives must be symmetric");
      }
}

double PointGeometry::mean_curvature_norm() const {
  double s = 0.0;
  for (double v : H) s += v * v;
  return std::sqrt(s);
}

Metric compute_metric(const JetAtPoint& jet) {
  require_jet_shape(jet);
  const int n = jet.n, m = jet.m;
  Metric out;
  out.g.assign(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = i == j ? 1.0 : 0.0;
      for (int b = 0; b < m; ++b) s += jet.first(b, i) * jet.first(b, j);
      out.g[i * n + j] = s;
    }
  std::vector<double> l = detail::cholesky(n, out.g);
  out.sqrt_g = 1.0;
  for (int i = 0; i < n; ++i) {
    if (!(l[i * n + i] > 0.0)) throw std::logic_error("compute_metric: induced metric lost positive definiteness");
    out.sqrt_g *= l[i * n + i];
  }
  out.g_inv = detail::spd_inverse(n, l);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += out.g[i * n + k] * out.g_inv[k * n + j];
      if (std::abs(s - (i == j ? 1.0 : 0.0)) > kCrossCheckTol * std::max(1.0, out.sqrt_g * out.sqrt_g))
        throw std::logic_error("compute_metric: g * g_inv differs from the identity");
    }
  return out;
}

double compute_star_omega(const JetAtPoint& jet) {
  require_jet_shape(jet);
  const int n = jet.n, m = jet.m;
  Eigen::MatrixXd d(m, n);
  for (int b = 0; b < m; ++b)
    for (int i = 0; i < n; ++i) d(b, i) = jet.first(b, i);
  Eigen::MatrixXd small = Eigen::MatrixXd::Identity(m, m) + d * d.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(small);
  double det_root = 1.0;
  for (int b = 0; b < m; ++b) det_root *= llt.matrixL()(b, b);
  double via_codomain = 1.0 / det_root;
  double via_metric = 1.0 / compute_metric(jet).sqrt_g;
  if (std::abs(via_codomain - via_metric) > kCrossCheckTol * via_metric)
    throw std::logic_error("compute_star_omega: determinant routes disagree");
  return via_codomain;
}

Frames build_frames(const JetAtPoint& jet) {
  require_jet_shape(jet);
  std::vector<double> d2f_zero(static_cast<std::size_t>(jet.m * jet.n * jet.n), 0.0);
  auto core = detail::core_geometry<double>(jet.n, jet.m, jet.df, d2f_zero);
  return Frames{jet.n, jet.m, std::move(core.tangent), std::move(core.normal)};
}

std::vector<double> tangent_coefficients(const Frames& frames) {
  const int n = frames.n;
  std::vector<double> u(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) u[i * n + a] = frames.tangent_vector(i)[a];
  return u;
}

std::vector<double> compute_second_fundamental_form(const JetAtPoint& jet, const Frames& frames) {
  const int n = jet.n, m = jet.m, len = n + m;
  if (static_cast<int>(jet.d2f.size()) != m * n * n) throw InvalidInput("compute_second_fundamental_form: d2f has wrong size");
  std::vector<double> u = tangent_coefficients(frames);
  std::vector<double> hc(static_cast<std::size_t>(m * n * n), 0.0);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int b = 0; b < m; ++b) s += jet.second(b, i, j) * frames.normal[static_cast<std::size_t>(a * len + n + b)];
        hc[(a * n + i) * n + j] = s;
      }
  std::vector<double> h(static_cast<std::size_t>(m * n * n), 0.0);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) s += u[i * n + p] * u[j * n + q] * hc[(a * n + p) * n + q];
        h[(a * n + i) * n + j] = s;
        h[(a * n + j) * n + i] = s;
      }
  return h;
}

std::vector<double> compute_normal_curvature(int m, int n, std::span<const double> h) {
  if (static_cast<int>(h.size()) != m * n * n) throw InvalidInput("compute_normal_curvature: h has wrong size");
  auto H = [&](int a, int i, int j) { return h[(a * n + i) * n + j]; };
  std::vector<double> r(static_cast<std::size_t>(m * m * n * n), 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) s += H(a, i, k) * H(b, j, k) - H(a, j, k) * H(b, i, k);
          // Fill the four antisymmetric images so the symmetries hold exactly.
          r[((a * m + b) * n + i) * n + j] = s;
          r[((a * m + b) * n + j) * n + i] = -s;
          r[((b * m + a) * n + i) * n + j] = -s;
          r[((b * m + a) * n + j) * n + i] = s;
        }
  return r;
}

double flatness_defect(std::span<const double> R_perp) {
  double d = 0.0;
  for (double v : R_perp) d = std::max(d, std::abs(v));
  return d;
}

double compute_omega_minor(const Frames& frames, int alpha, int beta, int i, int j) {
  const int n = frames.n, m = frames.m;
  if (alpha < 0 || alpha >= m || beta < 0 || beta >= m || i < 0 || j >= n || !(i < j))
    throw std::out_of_range("compute_omega_minor: index out of range");
  Eigen::MatrixXd rows(n, n);
  for (int r = 0; r < n; ++r) {
    const double* v = r == i ? frames.normal_vector(alpha) : r == j ? frames.normal_vector(beta) : frames.tangent_vector(r);
    for (int c = 0; c < n; ++c) rows(r, c) = v[c];
  }
  return rows.determinant();
}

double compute_projection_jacobian(const Frames& frames) {
  const int n = frames.n;
  Eigen::MatrixXd rows(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) rows(r, c) = frames.tangent_vector(r)[c];
  return rows.determinant();
}

PointGeometry compute_point_geometry(const JetAtPoint& jet) {
  require_jet_shape(jet);
  const int n = jet.n, m = jet.m;
  if (static_cast<int>(jet.d2f.size()) != m * n * n) throw InvalidInput("compute_point_geometry: d2f has wrong size");
  auto core = detail::core_geometry<double>(n, m, jet.df, jet.d2f);
  PointGeometry geo;
  geo.n = n;
  geo.m = m;
  geo.g = std::move(core.g);
  geo.g_inv = std::move(core.g_inv);
  geo.sqrt_g = core.sqrt_g;
  geo.star_omega = core.star_omega;
  geo.frames = Frames{n, m, std::move(core.tangent), std::move(core.normal)};
  geo.h_coord = std::move(core.h_coord);
  geo.h = compute_second_fundamental_form(jet, geo.frames);
  geo.R_perp = compute_normal_curvature(m, n, geo.h);
  geo.A_norm2 = 0.0;
  for (double v : geo.h) geo.A_norm2 += v * v;
  geo.H.assign(static_cast<std::size_t>(m), 0.0);
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i) geo.H[a] += geo.h_at(a, i, i);
  return geo;
}

}  // namespace mingraph
