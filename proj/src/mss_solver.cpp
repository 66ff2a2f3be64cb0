#include "mingraph/mss_solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "mingraph/detail/stencils.hpp"
#include "mingraph/discrete_calculus.hpp"
#include "mingraph/errors.hpp"
#include "mingraph/parallel.hpp"

namespace mingraph {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct FluxFields {
  std::vector<double> P, a, da;
};

FluxFields flux_fields(const GridChart& chart, int m, const std::vector<double>& values, bool with_jacobian) {
  const int n = chart.dim();
  FluxFields F;
  std::vector<std::uint8_t> ok;
  detail::grid_gradient(chart, m, values, std::vector<std::uint8_t>(chart.size(), 1), 2, F.P, ok);
  F.a.assign(chart.size() * n * n, 0.0);
  if (with_jacobian) F.da.assign(chart.size() * m * n * n * n, 0.0);
  parallel_for(chart.size(), [&](std::size_t p) {
    std::vector<double> g_inv(n * n);
    double sg;
    const double* P = &F.P[p * m * n];
    detail::flux_coefficients(n, m, P, &F.a[p * n * n], g_inv.data(), &sg);
    if (with_jacobian) detail::flux_jacobian(n, m, P, g_inv.data(), sg, &F.da[p * m * n * n * n]);
  });
  return F;
}

std::vector<long> unknown_index(const GridChart& chart) {
  std::vector<long> idx(chart.size(), -1);
  long k = 0;
  for (std::size_t p = 0; p < chart.size(); ++p)
    if (!chart.is_boundary(p)) idx[p] = k++;
  return idx;
}

Eigen::VectorXd gather(const std::vector<long>& idx, int m, const std::vector<double>& node_values, long unknowns) {
  Eigen::VectorXd v(unknowns * m);
  for (std::size_t p = 0; p < idx.size(); ++p)
    if (idx[p] >= 0)
      for (int b = 0; b < m; ++b) v(idx[p] * m + b) = node_values[p * m + b];
  return v;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Pairwise-summed Euclidean norm, independent of the thread count.
double norm(const Eigen::VectorXd& v) {
  std::vector<double> sq(v.size());
  for (long i = 0; i < v.size(); ++i) sq[i] = v(i) * v(i);
  return std::sqrt(pairwise_sum(sq));
}

void check_problem(const DirichletProblem& pb) {
  const GridChart& chart = pb.chart;
  if (pb.m < 1) throw InvalidInput("solve: codimension must be at least 1");
  for (int a = 0; a < chart.dim(); ++a)
    if (chart.count()[a] < 9) throw InvalidInput("solve: the chart needs at least 9 nodes per axis");
  if (pb.values.size() != chart.size() * static_cast<std::size_t>(pb.m))
    throw InvalidInput("solve: expected " + std::to_string(chart.size() * pb.m) + " values, got " +
                       std::to_string(pb.values.size()));
  if (!(pb.newton.residual_tol > 0.0)) throw InvalidInput("solve: residual_tol must be positive");
  if (pb.newton.max_iters < 0) throw InvalidInput("solve: max_iters must be non-negative");
  if (!(pb.newton.min_step > 0.0 && pb.newton.min_step <= 1.0)) throw InvalidInput("solve: min_step must lie in (0, 1]");
  for (std::size_t p = 0; p < chart.size(); ++p) {
    if (!chart.is_boundary(p) && pb.initial != InitialGuess::given) continue;
    for (int b = 0; b < pb.m; ++b)
      if (!std::isfinite(pb.values[p * pb.m + b]))
        throw InvalidInput(chart.is_boundary(p) ? "solve: boundary values must be finite"
                                                : "solve: the initial guess must be finite");
  }
}

}  // namespace

std::vector<double> mss_discrete_residual(const GridChart& chart, int m, const std::vector<double>& values) {
  FluxFields F = flux_fields(chart, m, values, false);
  std::vector<double> r(chart.size() * m, 0.0);
  parallel_for(chart.size(), [&](std::size_t p) {
    if (chart.is_boundary(p)) return;
    for (int b = 0; b < m; ++b)
      r[p * m + b] = detail::compact_divergence(chart, p, F.a.data(), values.data(), m, b, F.P.data());
  });
  return r;
}

SpMat mss_jacobian(const GridChart& chart, int m, const std::vector<double>& values) {
  const int n = chart.dim();
  const std::size_t nn = static_cast<std::size_t>(n) * n, nda = static_cast<std::size_t>(m) * n * n * n;
  FluxFields F = flux_fields(chart, m, values, true);
  const std::vector<long> idx = unknown_index(chart);
  std::vector<std::size_t> rows_nodes;
  for (std::size_t p = 0; p < chart.size(); ++p)
    if (idx[p] >= 0) rows_nodes.push_back(p);
  std::vector<std::vector<Triplet>> rows(rows_nodes.size());

  parallel_for(rows_nodes.size(), [&](std::size_t r) {
    const std::size_t p = rows_nodes[r];
    auto& t = rows[r];
    detail::Stencil s;
    for (int b = 0; b < m; ++b) {
      const int row = static_cast<int>(idx[p] * m + b);
      auto emit = [&](std::size_t q, int c, double w) {
        if (idx[q] >= 0 && w != 0.0) t.emplace_back(row, static_cast<int>(idx[q] * m + c), w);
      };
      // d P^c_k(q) / d values, through the gradient stencil at q.
      auto emit_gradient = [&](std::size_t q, int c, int k, double w) {
        detail::first_derivative_stencil(chart, q, k, 2, s);
        for (const auto& term : s) emit(term.node, c, w * term.weight);
      };
      // Dependence of the residual on a_kl(q).
      auto emit_flux = [&](std::size_t q, int k, int l, double w) {
        if (w == 0.0) return;
        const double* da = &F.da[q * nda];
        for (int c = 0; c < m; ++c)
          for (int kk = 0; kk < n; ++kk) {
            const double d = da[((c * n + kk) * n + k) * n + l];
            if (d != 0.0) emit_gradient(q, c, kk, w * d);
          }
      };
      const double u = values[p * m + b];
      for (int i = 0; i < n; ++i) {
        const double h = chart.spacing(i), h2 = h * h;
        const std::size_t qp = chart.shifted(p, i, 1), qm = chart.shifted(p, i, -1);
        const double up = values[qp * m + b], um = values[qm * m + b];
        const double aii = F.a[p * nn + i * n + i];
        const double ap = 0.5 * (aii + F.a[qp * nn + i * n + i]), am = 0.5 * (aii + F.a[qm * nn + i * n + i]);
        emit(qp, b, ap / h2);
        emit(qm, b, am / h2);
        emit(p, b, -(ap + am) / h2);
        emit_flux(p, i, i, 0.5 * ((up - u) - (u - um)) / h2);
        emit_flux(qp, i, i, 0.5 * (up - u) / h2);
        emit_flux(qm, i, i, -0.5 * (u - um) / h2);
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          emit_gradient(qp, b, j, F.a[qp * nn + i * n + j] / (2.0 * h));
          emit_gradient(qm, b, j, -F.a[qm * nn + i * n + j] / (2.0 * h));
          emit_flux(qp, i, j, F.P[(qp * m + b) * n + j] / (2.0 * h));
          emit_flux(qm, i, j, -F.P[(qm * m + b) * n + j] / (2.0 * h));
        }
      }
    }
  });
  std::vector<Triplet> all;
  for (auto& t : rows) all.insert(all.end(), t.begin(), t.end());
  const long N = static_cast<long>(rows_nodes.size()) * m;
  SpMat J(N, N);
  J.setFromTriplets(all.begin(), all.end());
  return J;
}

std::vector<double> harmonic_extension(const GridChart& chart, int m, const std::vector<double>& values) {
  const int n = chart.dim();
  const std::vector<long> idx = unknown_index(chart);
  long N = 0;
  for (long v : idx) N += v >= 0;
  std::vector<Triplet> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(N, m);
  for (std::size_t p = 0; p < chart.size(); ++p) {
    if (idx[p] < 0) continue;
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = 1.0 / (chart.spacing(i) * chart.spacing(i));
      diag += 2.0 * w;
      for (int sgn : {-1, 1}) {
        const std::size_t q = chart.shifted(p, i, sgn);
        if (idx[q] >= 0)
          trip.emplace_back(idx[p], idx[q], -w);
        else
          for (int b = 0; b < m; ++b) rhs(idx[p], b) += w * values[q * m + b];
      }
    }
    trip.emplace_back(idx[p], idx[p], diag);
  }
  SpMat L(N, N);
  L.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SpMat> ldlt(L);
  if (ldlt.info() != Eigen::Success) throw ConvergenceError("harmonic_extension: factorization failed", 0.0);
  Eigen::MatrixXd x = ldlt.solve(rhs);
  std::vector<double> out = values;
  for (std::size_t p = 0; p < chart.size(); ++p)
    if (idx[p] >= 0)
      for (int b = 0; b < m; ++b) out[p * m + b] = x(idx[p], b);
  return out;
}

DirichletProblem problem_from_map(const GraphMap& map, const GridChart& chart, InitialGuess initial) {
  Field vals = sample_values(map, chart);
  for (std::size_t p = 0; p < chart.size(); ++p) {
    if (vals.valid[p]) continue;
    if (chart.is_boundary(p)) throw InvalidInput("problem_from_map: boundary node outside the map's domain");
    if (initial == InitialGuess::given) throw InvalidInput("problem_from_map: interior node outside the map's domain");
    for (int b = 0; b < vals.components; ++b) vals.at(p, b) = 0.0;
  }
  DirichletProblem pb;
  pb.chart = chart;
  pb.m = map.codim();
  pb.values = std::move(vals.values);
  pb.initial = initial;
  return pb;
}

SolveResult solve(const DirichletProblem& pb) {
  check_problem(pb);
  const GridChart& chart = pb.chart;
  const int m = pb.m;
  const std::vector<long> idx = unknown_index(chart);
  long N = 0;
  for (long v : idx) N += v >= 0;

  std::vector<double> f = pb.values;
  if (pb.initial == InitialGuess::harmonic) {
    f = harmonic_extension(chart, m, f);
  } else if (pb.initial == InitialGuess::zero) {
    for (std::size_t p = 0; p < chart.size(); ++p)
      if (idx[p] >= 0)
        for (int b = 0; b < m; ++b) f[p * m + b] = 0.0;
  }

  SolveResult out;
  Eigen::VectorXd r = gather(idx, m, mss_discrete_residual(chart, m, f), N);
  double rn = norm(r);
  out.residual_max.push_back(max_abs(r));
  out.residual_norm.push_back(rn);
  std::vector<double> best = f;
  double best_max = out.residual_max.back();
  const NewtonOptions& nw = pb.newton;

  while (out.residual_max.back() > nw.residual_tol) {
    if (out.iterations >= nw.max_iters) {
      out.message = "maximum number of Newton iterations (" + std::to_string(nw.max_iters) + ") reached";
      break;
    }
    SpMat J = mss_jacobian(chart, m, f);
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(J);
    lu.factorize(J);
    if (lu.info() != Eigen::Success) throw ConvergenceError("solve: Jacobian factorization failed: " + lu.lastErrorMessage(), rn);
    Eigen::VectorXd delta = lu.solve(-r);
    if (lu.info() != Eigen::Success || !delta.allFinite()) throw ConvergenceError("solve: linear solve broke down", rn);

    double t = 1.0;
    bool accepted = false;
    std::vector<double> trial(f.size());
    Eigen::VectorXd rt;
    double rtn = 0.0;
    while (t >= nw.min_step) {
      trial = f;
      for (std::size_t p = 0; p < chart.size(); ++p)
        if (idx[p] >= 0)
          for (int b = 0; b < m; ++b) trial[p * m + b] += t * delta(idx[p] * m + b);
      rt = gather(idx, m, mss_discrete_residual(chart, m, trial), N);
      if (!rt.allFinite()) throw ConvergenceError("solve: iterate left the finite range", rn);
      rtn = norm(rt);
      if (rtn <= (1.0 - nw.armijo * t) * rn) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      out.message = "line search stalled below step " + std::to_string(nw.min_step);
      break;
    }
    f = std::move(trial);
    r = std::move(rt);
    rn = rtn;
    ++out.iterations;
    out.step_lengths.push_back(t);
    out.residual_max.push_back(max_abs(r));
    out.residual_norm.push_back(rn);
    if (out.residual_max.back() < best_max) {
      best_max = out.residual_max.back();
      best = f;
    }
  }
  out.converged = best_max <= nw.residual_tol;
  if (out.converged) out.message = "converged";
  out.graph = std::make_shared<SampledGraph>(chart, m, std::move(best), "mss_solution");
  return out;
}

}  // namespace mingraph
