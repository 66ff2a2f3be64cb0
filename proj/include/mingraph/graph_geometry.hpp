#pragma once

// Pointwise differential geometry of the graph of f: R^n -> R^m.
//
// Conventions (all arrays row-major):
//   df[b][i]            = d f^b / d x^i                 (m x n)
//   d2f[b][i][j]        = d^2 f^b / d x^i d x^j         (m x n x n)
//   h[a][i][j]          = < D_{e_i} e_j, e_a >          (orthonormal frames)
//   R_perp[a][b][i][j]  = sum_k h_aik h_bjk - h_ajk h_bik
//
// The second fundamental form uses the common sign <D_{e_i} e_j, e_a>, which
// is the negative of <D_{e_i} e_a, e_j>. Every identity verified downstream
// is quadratic in h, so the choice does not affect any check.

#include <span>
#include <vector>

namespace mingraph {

struct JetAtPoint {
  int n = 0, m = 0;
  std::vector<double> x;    // n
  std::vector<double> f;    // m
  std::vector<double> df;   // m x n
  std::vector<double> d2f;  // m x n x n
  std::vector<double> d3f;  // m x n^3, empty unless requested
  std::vector<double> d4f;  // m x n^4, empty unless requested

  double first(int b, int i) const { return df[b * n + i]; }
  double second(int b, int i, int j) const { return d2f[(b * n + i) * n + j]; }

  /// Throws InvalidInput on shape mismatch, non-finite entries, or an
  /// asymmetric second derivative.
  void validate() const;
};

struct Metric {
  std::vector<double> g;      // n x n
  std::vector<double> g_inv;  // n x n
  double sqrt_g = 1.0;
};

struct Frames {
  int n = 0, m = 0;
  std::vector<double> tangent;  // n x (n+m)
  std::vector<double> normal;   // m x (n+m)

  int ambient() const { return n + m; }
  const double* tangent_vector(int i) const { return &tangent[static_cast<std::size_t>(i * (n + m))]; }
  const double* normal_vector(int a) const { return &normal[static_cast<std::size_t>(a * (n + m))]; }
};

struct PointGeometry {
  int n = 0, m = 0;
  std::vector<double> g, g_inv;
  double sqrt_g = 1.0;
  double star_omega = 1.0;
  Frames frames;
  std::vector<double> h;        // m x n x n, orthonormal frame
  std::vector<double> h_coord;  // m x n x n, coordinate tangent indices
  std::vector<double> R_perp;   // m x m x n x n
  double A_norm2 = 0.0;
  std::vector<double> H;        // m, H^a = sum_i h_aii

  double h_at(int a, int i, int j) const { return h[(a * n + i) * n + j]; }
  double R_at(int a, int b, int i, int j) const { return R_perp[((a * m + b) * n + i) * n + j]; }
  double mean_curvature_norm() const;
};

Metric compute_metric(const JetAtPoint& jet);

/// 1/sqrt(det(I_m + df df^T)), cross-checked against 1/sqrt(det(I_n + df^T df)).
double compute_star_omega(const JetAtPoint& jet);

/// Gram-Schmidt frames in fixed index order.
Frames build_frames(const JetAtPoint& jet);

/// h[a][i][j] in the orthonormal frames.
std::vector<double> compute_second_fundamental_form(const JetAtPoint& jet, const Frames& frames);

/// R_{abij} from the Ricci equation.
std::vector<double> compute_normal_curvature(int m, int n, std::span<const double> h);

/// max |R_{abij}|.
double flatness_defect(std::span<const double> R_perp);

/// det of the n x n matrix of horizontal components of (e_1..e_n) with e_alpha
/// in slot i and e_beta in slot j. Requires i < j.
double compute_omega_minor(const Frames& frames, int alpha, int beta, int i, int j);

/// Omega(e_1, ..., e_n), equal to *Omega.
double compute_projection_jacobian(const Frames& frames);

PointGeometry compute_point_geometry(const JetAtPoint& jet);

/// Coordinate -> orthonormal change of basis U with e_i = sum_a U_ia X_a; equals
/// the horizontal part of the tangent frame.
std::vector<double> tangent_coefficients(const Frames& frames);

}  // namespace mingraph
