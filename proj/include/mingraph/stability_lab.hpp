#pragma once

// The Jacobi-type operator -Delta - |A|^2 on compact subdomains, the scalar
// stability inequality  int u^2 |A|^2 <= int |grad u|^2  and the second
// variation of volume for normal fields V = V^a nu_a.
//
// Discrete forms: the Dirichlet form is the compact divergence-form operator
// of discrete_calculus with u = 0 outside the subdomain, and the mass matrix
// is diag(sqrt g) (the cell volume cancels from Rayleigh quotients).

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mingraph/discrete_calculus.hpp"

namespace mingraph {

/// Axis-aligned box in the domain.
struct Box {
  std::vector<double> lo, hi;
};

struct EigenOptions {
  double rq_tolerance = 1e-10;
  int max_iterations = 500;
};

struct StabilityReport {
  std::string domain;
  double lambda_min = 0.0;
  /// Normalized so that int u^2 dmu = 1 and sum u >= 0.
  Field eigenfunction;
  int iterations = 0;
  std::size_t unknowns = 0;
  std::vector<std::pair<double, double>> quadratic_form_pairs;
  std::vector<std::pair<double, double>> second_variation_pairs;
};

/// (int u^2 |A|^2 dmu, int g^ij d_i u d_j u dmu) with central differences.
/// u must vanish within two cells of the chart boundary.
std::pair<double, double> stability_pair(const Field& u, const GeometryField& geo);

/// Smallest eigenvalue of -Delta - |A|^2 with Dirichlet conditions on the
/// nodes strictly inside `subdomain` (whole chart when absent), by shifted
/// inverse iteration from the all-ones seed. LDLT for n <= 2, diagonally
/// preconditioned CG above. ConvergenceError when the Rayleigh quotient does
/// not settle.
StabilityReport jacobi_lambda_min(const GeometryField& geo, const std::optional<Box>& subdomain = std::nullopt,
                                  const EigenOptions& options = {}, bool include_curvature = true);

enum class FrameMode { parallel_frame, general };
FrameMode parse_frame_mode(const std::string& name);

/// (int sum_ij (sum_a V^a h_aij)^2, int sum_i |(nabla_{e_i} V)^perp|^2). V has
/// m components in the geometry's normal frame nu_a and must vanish within
/// two cells of the boundary. parallel_frame needs a flat normal bundle.
std::pair<double, double> second_variation(const Field& V, const GeometryField& geo, FrameMode mode);

/// Orthogonal m x m matrices P per node with e~_a = sum_b P_ab nu_b parallel,
/// on the interior box of the chart (nodes at least `margin` cells in).
/// Transport is trapezoidal (Cayley) along the tree whose parent of p is
/// p - e_k, k the last axis not at its first interior index. PreconditionError
/// when a non-tree edge disagrees by more than 10 h^2.
struct ParallelFrame {
  std::vector<double> P;  // node * m * m
  std::vector<std::uint8_t> defined;
  double holonomy_defect = 0.0;
};
ParallelFrame parallel_normal_frame(const GeometryField& geo);

struct ComponentwiseReport {
  /// max over nodes of sum_ij (sum_a V^a h_aij)^2 - |V|^2 |A|^2 (<= 0 by Cauchy-Schwarz).
  double max_pointwise_excess = 0.0;
  double lhs = 0.0;           // int sum_ij (sum_a V^a h_aij)^2
  double curvature_sum = 0.0; // int |V|^2 |A|^2
  double gradient_sum = 0.0;  // sum_a int |grad V^a|^2
  bool pass = false;
};
/// Flat normal bundle only. V components in the parallel normal frame.
ComponentwiseReport componentwise_reduction_check(const Field& V, const GeometryField& geo);

/// Tensor-product bump prod_k exp(1 - 1/(1 - t_k^2)), t_k = (x_k - c_k)/w_k,
/// with random centre and widths such that the support stays three cells
/// inside the chart.
Field random_bump(const GridChart& chart, std::mt19937_64& rng);
/// m independent bumps with random amplitudes in [-1, 1].
Field random_normal_field(const GridChart& chart, int m, std::mt19937_64& rng);

/// Seeded stability pairs and second-variation pairs on a geometry.
StabilityReport stability_probes(const GeometryField& geo, int scalar_pairs, int vector_pairs, std::uint64_t seed,
                                 FrameMode mode = FrameMode::general);

}  // namespace mingraph
