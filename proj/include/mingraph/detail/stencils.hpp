#pragma once

// Finite-difference stencils on a GridChart and the flux coefficients of the
// minimal surface system. Shared by discrete_calculus and mss_solver.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mingraph/grid.hpp"

namespace mingraph::detail {

struct StencilTerm {
  std::size_t node;
  double weight;
};

/// Small fixed-capacity stencil (at most 6 points along one axis).
struct Stencil {
  StencilTerm terms[6];
  int size = 0;
  void add(std::size_t node, double w) { terms[size++] = {node, w}; }
  const StencilTerm* begin() const { return terms; }
  const StencilTerm* end() const { return terms + size; }
};

/// d/dx^axis at `node`: central in the interior, one-sided near faces.
/// order is 2 or 4. False when the axis is too short for the stencil.
bool first_derivative_stencil(const GridChart& chart, std::size_t node, int axis, int order, Stencil& out);

/// d^2/(dx^axis)^2 at `node`, same conventions.
bool second_derivative_stencil(const GridChart& chart, std::size_t node, int axis, int order, Stencil& out);

/// True when every node of the stencil is marked valid.
bool stencil_valid(const Stencil& s, const std::vector<std::uint8_t>& valid);

/// Applies a stencil to `comps` interleaved components: out[c] = sum_w w * data[node*comps + c].
void apply_stencil(const Stencil& s, const double* data, int comps, double* out);

/// Per-node gradients [node][comp][axis] of interleaved data. ok[node] is
/// set where every stencil node is valid; elsewhere the gradient is NaN.
void grid_gradient(const GridChart& chart, int comps, const std::vector<double>& data,
                   const std::vector<std::uint8_t>& valid, int order, std::vector<double>& grad,
                   std::vector<std::uint8_t>& ok);

/// All nodes within max-norm distance r of `node` are inside the chart and valid.
bool neighborhood_valid(const GridChart& chart, std::size_t node, int r, const std::vector<std::uint8_t>& valid);

/// a = sqrt(det g) g^{-1} for g = I + P^T P with P (m x n, row-major).
/// g_inv (n x n) and sqrt_g are returned as by-products.
void flux_coefficients(int n, int m, const double* P, double* a, double* g_inv, double* sqrt_g);

/// da[((b*n + k)*n + i)*n + j] = d a_ij / d P^b_k.
void flux_jacobian(int n, int m, const double* P, const double* g_inv, double sqrt_g, double* da);

/// Compact divergence-form operator sum_ij d_i(a_ij d_j u) at `node`
/// (requires boundary distance >= 1). a holds n*n coefficients per node; u
/// holds `comps` interleaved components of which `comp` is differentiated;
/// grad holds per-node gradients laid out [node][comp][axis] (comps * n per
/// node), used for the mixed terms.
double compact_divergence(const GridChart& chart, std::size_t node, const double* a, const double* u, int comps,
                          int comp, const double* grad);

}  // namespace mingraph::detail
