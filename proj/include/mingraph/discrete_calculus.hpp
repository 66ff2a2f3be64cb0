#pragma once

// Geometry over a grid chart: per-node pointwise geometry plus the
// derivative quantities (Christoffel symbols, normal connection, covariant
// derivative of the second fundamental form, Laplace-Beltrami operator) and
// integration over ambient balls.
//
// Analytic mode differentiates exactly through truncated Taylor series of the
// map. Sampled mode works from node values only, with second-order
// difference stencils and the compact divergence-form operator
//   (L u)(p) = sum_i [a+_ii (u(p+e_i) - u(p)) - a-_ii (u(p) - u(p-e_i))] / h_i^2
//            + sum_{i != j} [a_ij D_j u (p+e_i) - a_ij D_j u (p-e_i)] / (2 h_i),
// a = sqrt(g) g^{-1}, a+-_ii the averages of a_ii over the edge, and
// Delta u = L u / sqrt(g).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mingraph/graph_geometry.hpp"
#include "mingraph/graph_map.hpp"
#include "mingraph/grid.hpp"
#include "mingraph/taylor.hpp"

namespace mingraph {

enum class Mode { analytic, sampled };

/// "analytic" or "sampled"; anything else raises InvalidInput.
Mode parse_mode(const std::string& name);
const char* mode_name(Mode mode);

struct GeometryOptions {
  Mode mode = Mode::analytic;
  /// Christoffel symbols, normal connection, covariant derivative of A,
  /// connection curvature and exact Laplacians. Costly; off for eigenvalue
  /// and integration work.
  bool derivatives = true;
  /// Stencil order (2 or 4) for df and d2f in sampled mode.
  int fd_order = 2;
  /// Derived quantities are reported only this many cells from the chart boundary.
  int margin = 2;
};

/// A scalar built from s = |A|^2 and w = *Omega. Called with Taylor series in
/// analytic mode and with constants in sampled mode, so a single expression
/// serves both.
using ScalarExpr = std::function<Taylor(const Taylor& s, const Taylor& w)>;

class GeometryField {
 public:
  GeometryField(GraphMapPtr map, GridChart chart, GeometryOptions options = {});

  const GridChart& chart() const { return chart_; }
  const GraphMap& map() const { return *map_; }
  const GraphMapPtr& map_ptr() const { return map_; }
  const GeometryOptions& options() const { return opt_; }
  Mode mode() const { return opt_.mode; }
  int n() const { return n_; }
  int m() const { return m_; }
  bool has_derivatives() const { return opt_.derivatives; }

  /// Pointwise geometry defined (node in the map's domain, stencils fit).
  bool valid(std::size_t node) const { return valid_[node] != 0; }
  /// Derived quantities defined: valid, at least `margin` cells inside and,
  /// in sampled mode, every node within that distance valid.
  bool interior(std::size_t node) const { return interior_[node] != 0; }
  const std::vector<std::uint8_t>& valid_mask() const { return valid_; }
  const std::vector<std::uint8_t>& interior_mask() const { return interior_; }
  std::size_t interior_count() const;

  const PointGeometry& at(std::size_t node) const { return geo_[node]; }
  std::span<const double> f(std::size_t node) const { return span(f_, node, m_); }
  std::span<const double> df(std::size_t node) const { return span(df_, node, m_ * n_); }
  /// a = sqrt(g) g^{-1}, n x n.
  std::span<const double> flux(std::size_t node) const { return span(a_, node, n_ * n_); }
  /// |x|^2 + |f(x)|^2.
  double ambient_radius2(std::size_t node) const;

  // Derivative data (has_derivatives(), interior nodes).
  /// [k][i][j] = Gamma^k_ij.
  std::span<const double> christoffel(std::size_t node) const { return span(gamma_, node, n_ * n_ * n_); }
  /// [k][a][b] = <D_{d/dx^k} nu_a, nu_b>.
  std::span<const double> omega_coord(std::size_t node) const { return span(omega_, node, n_ * m_ * m_); }
  /// [i][a][b] = <D_{e_i} nu_a, nu_b>.
  std::span<const double> omega_frame(std::size_t node) const { return span(omega_frame_, node, n_ * m_ * m_); }
  /// [a][i][j][k] = h_{aij,k} in orthonormal frames.
  std::span<const double> grad_h(std::size_t node) const { return span(grad_h_, node, m_ * n_ * n_ * n_); }
  double grad_A_norm2(std::size_t node) const { return grad_A2_[node]; }
  /// Curvature of the normal connection, [a][b][i][j] = <R(e_i, e_j) nu_b, nu_a>.
  std::span<const double> connection_curvature(std::size_t node) const { return span(curv_, node, m_ * m_ * n_ * n_); }

  /// e(s, w) at valid nodes.
  Field scalar(const ScalarExpr& e) const;
  /// Laplace-Beltrami of e(s, w) at interior nodes (exact in analytic mode,
  /// compact operator in sampled mode).
  Field laplacian(const ScalarExpr& e) const;
  /// g^{ij} d_i e d_j e at interior nodes.
  Field gradient_norm2(const ScalarExpr& e) const;
  /// sum_ij d_i(sqrt(g) g^ij d_j f^alpha), m components.
  const Field& mss_residual() const { return mss_; }

 private:
  template <class V>
  static std::span<const double> span(const V& v, std::size_t node, int len) {
    if (v.empty()) return {};
    return {v.data() + node * static_cast<std::size_t>(len), static_cast<std::size_t>(len)};
  }
  void build_analytic();
  void build_sampled();
  void finish_derived(std::size_t node, const std::vector<double>& hc, const std::vector<double>& dh,
                      const std::vector<double>& dg, const std::vector<double>& domega);
  Taylor series(const std::vector<double>& coeffs, std::size_t node) const;

  GraphMapPtr map_;
  GridChart chart_;
  GeometryOptions opt_;
  int n_ = 0, m_ = 0;
  std::vector<std::uint8_t> valid_, interior_;
  std::vector<PointGeometry> geo_;
  std::vector<double> f_, df_, a_;
  std::vector<double> gamma_, omega_, omega_frame_, grad_h_, grad_A2_, curv_;
  // Analytic mode: degree-2 Taylor coefficients of s and w, and d_l a_ij.
  std::vector<double> s_coef_, w_coef_, a_grad_;
  int coef_len_ = 0;
  Field mss_;
};

ScalarExpr expr_A_norm2();
ScalarExpr expr_star_omega();

/// d field / dx^axis with the given stencil order (2 or 4); central inside,
/// one-sided at the faces, exact when the field carries a derivative hook.
/// Raises CoverageError when the axis is too short for the stencil.
Field differentiate(const Field& field, int axis, int order = 2);

/// Compact divergence-form Laplace-Beltrami operator applied to a scalar grid
/// field (masked at the boundary and wherever the stencil meets invalid nodes).
Field laplace_beltrami(const Field& u, const GeometryField& geometry);

/// Gamma^k_ij, n^3 components per node.
Field christoffel_symbols(const GeometryField& geometry);

/// omega_{kab} along the orthonormal tangent frame, n*m*m components.
Field normal_connection(const GeometryField& geometry);

struct CovariantDerivativeA {
  Field grad_h;        // m*n^3 components, h_{aij,k}
  Field grad_A_norm2;  // |nabla A|^2
  Field grad_abs_A2;   // |nabla |A||^2 = |nabla s|^2 / (4 s)
};
CovariantDerivativeA covariant_derivative_A(const GeometryField& geometry);

/// Normal-connection curvature minus the Ricci-equation R_perp, max |.| per node.
Field connection_curvature_defect(const GeometryField& geometry);

struct BallOptions {
  /// Exclude the ambient ball of this radius (annulus integration).
  double inner_radius = 0.0;
  /// CoverageError below this covered fraction.
  double min_coverage = 0.95;
};

struct BallIntegral {
  double value = 0.0;
  double coverage = 1.0;
  std::size_t nodes = 0;
  std::string warning;
};

/// Midpoint-rule integral of a scalar field over Sigma intersected with the
/// ambient ball B_R (sharp indicator, weights sqrt(g) * cell volume).
BallIntegral integrate_ball(const Field& integrand, const GeometryField& geometry, double radius,
                            const BallOptions& options = {});

/// Fraction of the ball covered by the chart: 1 when no valid chart-boundary
/// node lies in the ball, otherwise the fraction of the domain ball |x| <= R
/// inside the chart box.
double ball_coverage(const GeometryField& geometry, double radius);

/// Midpoint-rule integral over all nodes valid in both the field and the geometry.
double integrate(const Field& integrand, const GeometryField& geometry);

/// Residual of the minimal surface system without building the full
/// geometry: exact pointwise in analytic mode, compact operator on sampled
/// node values (boundary distance >= 1) in sampled mode.
Field mss_residual(const GraphMap& map, const GridChart& chart, Mode mode);

/// Node values of a map on a chart, NaN and invalid outside its domain.
Field sample_values(const GraphMap& map, const GridChart& chart);

}  // namespace mingraph
