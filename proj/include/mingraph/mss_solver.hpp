#pragma once

// Dirichlet problem for the minimal surface system on a box,
//   sum_ij D_i(a_ij(df) D_j f^b) = 0,  a = sqrt(g) g^{-1},
// discretized exactly as the sampled-mode residual of discrete_calculus:
// second-order gradients (one-sided on the chart faces), face-averaged a_ii
// and centred mixed terms. Unknowns are the nodes off the chart boundary.

#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mingraph/graph_map.hpp"
#include "mingraph/grid.hpp"

namespace mingraph {

struct NewtonOptions {
  int max_iters = 50;
  double residual_tol = 1e-10;
  /// Armijo sufficient-decrease constant; step halves from 1 down to min_step.
  double armijo = 1e-4;
  double min_step = 1.0 / 1024.0;
};

enum class InitialGuess { harmonic, zero, given };

struct DirichletProblem {
  GridChart chart;
  int m = 1;
  /// Node-major, m per node; boundary nodes carry the data, interior nodes
  /// the initial guess when initial = given.
  std::vector<double> values;
  InitialGuess initial = InitialGuess::harmonic;
  NewtonOptions newton;
};

/// Boundary data (and, with InitialGuess::given, the initial guess) sampled from a map.
DirichletProblem problem_from_map(const GraphMap& map, const GridChart& chart,
                                  InitialGuess initial = InitialGuess::harmonic);

struct SolveResult {
  std::shared_ptr<SampledGraph> graph;
  /// max |residual| over unknown nodes, before the first step and after each accepted step.
  std::vector<double> residual_max;
  /// Euclidean residual norms, same indexing.
  std::vector<double> residual_norm;
  std::vector<double> step_lengths;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Damped Newton with Armijo backtracking. Returns the best iterate with
/// converged = false when max_iters is reached or the line search stalls.
/// InvalidInput for bad problems, ConvergenceError for a singular Jacobian
/// or a non-finite iterate.
SolveResult solve(const DirichletProblem& problem);

/// Discrete residual at every node (zero on the boundary), node-major.
std::vector<double> mss_discrete_residual(const GridChart& chart, int m, const std::vector<double>& values);

/// d residual / d values restricted to unknown rows and columns; unknowns are
/// numbered node-major (node order, then component) over non-boundary nodes.
Eigen::SparseMatrix<double> mss_jacobian(const GridChart& chart, int m, const std::vector<double>& values);

/// Per component, the solution of the flat discrete Laplace equation with the
/// boundary values of `values`.
std::vector<double> harmonic_extension(const GridChart& chart, int m, const std::vector<double>& values);

}  // namespace mingraph
