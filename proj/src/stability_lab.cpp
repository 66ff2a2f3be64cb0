#include "mingraph/stability_lab.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mingraph/detail/stencils.hpp"
#include "mingraph/errors.hpp"
#include "mingraph/parallel.hpp"

namespace mingraph {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

double max_spacing(const GridChart& chart) {
  double h = 0.0;
  for (int a = 0; a < chart.dim(); ++a) h = std::max(h, chart.spacing(a));
  return h;
}

void require_compact(const Field& u, const GridChart& chart, int comps, const char* what) {
  if (!(u.chart == chart)) throw InvalidInput(std::string(what) + ": field is not on the geometry's chart");
  if (u.components != comps)
    throw InvalidInput(std::string(what) + ": field must have " + std::to_string(comps) + " components");
  for (std::size_t p = 0; p < chart.size(); ++p) {
    if (chart.boundary_distance(p) > 2) continue;
    for (int c = 0; c < comps; ++c)
      if (u.at(p, c) != 0.0)
        throw InvalidInput(std::string(what) + ": field is not compactly supported (nonzero within two cells of the boundary)");
  }
}

// g^{kl} x_k y_l summed over the first n entries.
double metric_dot(int n, const std::vector<double>& gi, const double* x, const double* y) {
  double s = 0.0;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) s += gi[k * n + l] * x[k] * y[l];
  return s;
}

std::vector<std::uint8_t> all_valid(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

// Nodes carrying data for the second-variation integrals.
bool usable(const GeometryField& geo, std::size_t p) { return geo.chart().boundary_distance(p) >= 2; }

std::string describe(const Box& box) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t a = 0; a < box.lo.size(); ++a) os << (a ? " x " : "") << "[" << box.lo[a] << ", " << box.hi[a] << "]";
  return os.str();
}

}  // namespace

std::pair<double, double> stability_pair(const Field& u, const GeometryField& geo) {
  const GridChart& chart = geo.chart();
  require_compact(u, chart, 1, "stability_pair");
  const int n = chart.dim();
  std::vector<double> grad;
  std::vector<std::uint8_t> ok;
  detail::grid_gradient(chart, 1, u.values, all_valid(chart.size()), 2, grad, ok);
  std::vector<double> lhs(chart.size(), 0.0), rhs(chart.size(), 0.0);
  std::vector<std::uint8_t> bad(chart.size(), 0);
  parallel_for(chart.size(), [&](std::size_t p) {
    if (!usable(geo, p)) return;
    const double* gp = &grad[p * n];
    bool zero = u.at(p) == 0.0;
    for (int k = 0; k < n; ++k) zero = zero && gp[k] == 0.0;
    if (zero) return;
    if (!geo.valid(p)) {
      bad[p] = 1;
      return;
    }
    const PointGeometry& G = geo.at(p);
    lhs[p] = u.at(p) * u.at(p) * G.A_norm2 * G.sqrt_g;
    rhs[p] = metric_dot(n, G.g_inv, gp, gp) * G.sqrt_g;
  });
  if (std::find(bad.begin(), bad.end(), 1) != bad.end())
    throw InvalidInput("stability_pair: support meets nodes outside the graph's domain");
  const double cell = chart.cell_volume();
  return {pairwise_sum(lhs) * cell, pairwise_sum(rhs) * cell};
}

StabilityReport jacobi_lambda_min(const GeometryField& geo, const std::optional<Box>& subdomain,
                                  const EigenOptions& options, bool include_curvature) {
  const GridChart& chart = geo.chart();
  const int n = chart.dim();
  Box box = subdomain.value_or(Box{chart.lo(), chart.hi()});
  if (static_cast<int>(box.lo.size()) != n || static_cast<int>(box.hi.size()) != n)
    throw InvalidInput("jacobi_lambda_min: subdomain dimension does not match the chart");
  for (int a = 0; a < n; ++a) {
    const double eps = 1e-9 * chart.spacing(a);
    if (!(box.lo[a] < box.hi[a]) || box.lo[a] < chart.lo()[a] - eps || box.hi[a] > chart.hi()[a] + eps)
      throw InvalidInput("jacobi_lambda_min: subdomain " + describe(box) + " is not inside the chart");
  }

  // Unknowns: nodes strictly inside the box whose whole 3^n neighbourhood is valid.
  std::vector<long> index(chart.size(), -1);
  std::vector<std::size_t> nodes;
  for (std::size_t p = 0; p < chart.size(); ++p) {
    bool inside = chart.boundary_distance(p) >= 1;
    for (int a = 0; a < n && inside; ++a) {
      const double x = chart.coord(p, a), eps = 1e-9 * chart.spacing(a);
      inside = x > box.lo[a] + eps && x < box.hi[a] - eps;
    }
    if (inside && geo.valid(p) && detail::neighborhood_valid(chart, p, 1, geo.valid_mask())) {
      index[p] = static_cast<long>(nodes.size());
      nodes.push_back(p);
    }
  }
  if (nodes.empty()) throw InvalidInput("jacobi_lambda_min: no grid node lies strictly inside " + describe(box));
  const long N = static_cast<long>(nodes.size());

  auto a_at = [&](std::size_t q, int i, int j) { return geo.flux(q)[i * n + j]; };
  std::vector<std::vector<Eigen::Triplet<double>>> rows(nodes.size());
  Eigen::VectorXd mass(N);
  double s_max = 0.0;
  parallel_for(nodes.size(), [&](std::size_t r) {
    const std::size_t p = nodes[r];
    auto& t = rows[r];
    auto add = [&](std::size_t q, double w) {
      if (index[q] >= 0) t.emplace_back(static_cast<int>(r), static_cast<int>(index[q]), w);
    };
    double diag = 0.0;
    for (int i = 0; i < n; ++i) {
      const double h = chart.spacing(i);
      const std::size_t qp = chart.shifted(p, i, 1), qm = chart.shifted(p, i, -1);
      const double ap = 0.5 * (a_at(p, i, i) + a_at(qp, i, i)), am = 0.5 * (a_at(p, i, i) + a_at(qm, i, i));
      diag += (ap + am) / (h * h);
      add(qp, -ap / (h * h));
      add(qm, -am / (h * h));
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double c = 1.0 / (4.0 * h * chart.spacing(j));
        const double wp = c * a_at(qp, i, j), wm = c * a_at(qm, i, j);
        add(chart.shifted(qp, j, 1), -wp);
        add(chart.shifted(qp, j, -1), wp);
        add(chart.shifted(qm, j, 1), wm);
        add(chart.shifted(qm, j, -1), -wm);
      }
    }
    const PointGeometry& G = geo.at(p);
    if (include_curvature) diag -= G.sqrt_g * G.A_norm2;
    t.emplace_back(static_cast<int>(r), static_cast<int>(r), diag);
    mass(static_cast<long>(r)) = G.sqrt_g;
  });
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    if (!(mass(static_cast<long>(r)) > 0.0)) throw std::logic_error("jacobi_lambda_min: mass matrix is not positive definite");
    if (include_curvature) s_max = std::max(s_max, geo.at(nodes[r]).A_norm2);
  }
  std::vector<Eigen::Triplet<double>> all;
  for (auto& t : rows) all.insert(all.end(), t.begin(), t.end());
  SpMat K(N, N);
  K.setFromTriplets(all.begin(), all.end());

  const double sigma = -(s_max + 1.0);
  SpMat A = K;
  for (long r = 0; r < N; ++r) A.coeffRef(r, r) -= sigma * mass(r);

  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> solve;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  if (n <= 2) {
    ldlt.compute(A);
    if (ldlt.info() != Eigen::Success) throw ConvergenceError("jacobi_lambda_min: LDLT factorization failed", 0.0);
    solve = [&](const Eigen::VectorXd& b) { return Eigen::VectorXd(ldlt.solve(b)); };
  } else {
    cg.setTolerance(1e-13);
    cg.setMaxIterations(static_cast<int>(std::max<long>(1000, 4 * N)));
    cg.compute(A);
    solve = [&](const Eigen::VectorXd& b) {
      Eigen::VectorXd x = cg.solve(b);
      if (cg.info() != Eigen::Success) throw ConvergenceError("jacobi_lambda_min: CG did not converge", cg.error());
      return x;
    };
  }

  auto mnorm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(mass.cwiseProduct(v))); };
  Eigen::VectorXd x = Eigen::VectorXd::Ones(N);
  x /= mnorm(x);
  double rq = x.dot(K * x), change = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < options.max_iterations) {
    ++it;
    Eigen::VectorXd y = solve(mass.cwiseProduct(x));
    y /= mnorm(y);
    const double next = y.dot(K * y);
    change = std::abs(next - rq);
    rq = next;
    x = std::move(y);
    if (change < options.rq_tolerance) break;
  }
  if (!(change < options.rq_tolerance))
    throw ConvergenceError("jacobi_lambda_min: Rayleigh quotient still moving by " + std::to_string(change) + " after " +
                               std::to_string(it) + " iterations",
                           change);

  StabilityReport out;
  out.domain = describe(box);
  out.lambda_min = rq;
  out.iterations = it;
  out.unknowns = nodes.size();
  if (x.sum() < 0.0) x = -x;
  x /= std::sqrt(chart.cell_volume());
  out.eigenfunction = Field(chart, 1, 0.0);
  out.eigenfunction.valid = geo.valid_mask();
  for (std::size_t r = 0; r < nodes.size(); ++r) out.eigenfunction.at(nodes[r]) = x(static_cast<long>(r));
  return out;
}

FrameMode parse_frame_mode(const std::string& name) {
  if (name == "parallel_frame") return FrameMode::parallel_frame;
  if (name == "general") return FrameMode::general;
  throw InvalidInput("frame mode must be 'parallel_frame' or 'general', got '" + name + "'");
}

ParallelFrame parallel_normal_frame(const GeometryField& geo) {
  if (!geo.has_derivatives()) throw PreconditionError("parallel_normal_frame: geometry was built without derivative data");
  const GridChart& chart = geo.chart();
  const int n = chart.dim(), m = geo.m(), margin = geo.options().margin;
  double flat = 0.0;
  for (std::size_t p = 0; p < chart.size(); ++p)
    if (geo.interior(p)) flat = std::max(flat, flatness_defect(geo.at(p).R_perp));
  if (!(flat <= 1e-8))
    throw PreconditionError("parallel_normal_frame: normal bundle is not flat (flatness defect " + std::to_string(flat) + ")");
  for (int a = 0; a < n; ++a)
    if (chart.count()[a] - 1 - 2 * margin < 0) throw InvalidInput("parallel_normal_frame: chart too small for the margin");

  auto in_box = [&](std::size_t p) { return chart.boundary_distance(p) >= margin; };
  ParallelFrame out;
  out.P.assign(chart.size() * m * m, 0.0);
  out.defined.assign(chart.size(), 0);
  using Mat = Eigen::MatrixXd;
  auto omega = [&](std::size_t p, int k) {
    Mat w(m, m);
    auto om = geo.omega_coord(p);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) w(a, b) = om[(k * m + a) * m + b];
    return w;
  };
  auto load = [&](std::size_t p) { return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(&out.P[p * m * m], m, m); };
  // P(to) = P(from) (I - h W/2)(I + h W/2)^-1 with W the mean of omega_k over the edge, step signed.
  auto transport = [&](std::size_t from, std::size_t to, int k, double step) {
    Mat w = 0.5 * (omega(from, k) + omega(to, k)) * step;
    Mat I = Mat::Identity(m, m);
    return Mat(Mat(load(from)) * (I - 0.5 * w) * (I + 0.5 * w).inverse());
  };
  for (std::size_t p = 0; p < chart.size(); ++p) {
    if (!in_box(p)) continue;
    if (!geo.interior(p)) throw PreconditionError("parallel_normal_frame: interior node without derivative data");
    int k = -1;
    for (int a = 0; a < n; ++a)
      if (chart.axis_index(p, a) > margin) k = a;
    Mat P = k < 0 ? Mat::Identity(m, m) : transport(chart.shifted(p, k, -1), p, k, chart.spacing(k));
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) out.P[p * m * m + a * m + b] = P(a, b);
    out.defined[p] = 1;
  }
  // Holonomy over the non-tree edges.
  double defect = 0.0;
  for (std::size_t p = 0; p < chart.size(); ++p) {
    if (!in_box(p)) continue;
    int k = -1;
    for (int a = 0; a < n; ++a)
      if (chart.axis_index(p, a) > margin) k = a;
    for (int j = 0; j < n; ++j) {
      std::size_t q;
      if (!chart.shift(p, j, -1, q) || !in_box(q) || j == k) continue;
      Mat d = transport(q, p, j, chart.spacing(j)) - Mat(load(p));
      defect = std::max(defect, d.cwiseAbs().maxCoeff());
    }
  }
  out.holonomy_defect = defect;
  const double h = max_spacing(chart), tol = 10.0 * h * h;
  if (defect > tol)
    throw PreconditionError("parallel_normal_frame: holonomy defect " + std::to_string(defect) + " exceeds 10 h^2 = " +
                            std::to_string(tol) + "; the normal connection is not flat at this resolution");
  return out;
}

namespace {

// Components of V in the parallel frame: V~_a = sum_b P_ab V^b.
Field to_parallel(const Field& V, const ParallelFrame& frame, int m) {
  Field out(V.chart, m, 0.0);
  for (std::size_t p = 0; p < V.chart.size(); ++p) {
    if (!frame.defined[p]) continue;
    for (int a = 0; a < m; ++a) {
      double s = 0.0;
      for (int b = 0; b < m; ++b) s += frame.P[p * m * m + a * m + b] * V.at(p, b);
      out.at(p, a) = s;
    }
  }
  return out;
}

double hv_square(const PointGeometry& G, const double* v) {
  const int n = G.n, m = G.m;
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double t = 0.0;
      for (int a = 0; a < m; ++a) t += v[a] * G.h_at(a, i, j);
      s += t * t;
    }
  return s;
}

// sum_a int |grad W^a|^2 for a field of scalar components.
double gradient_energy(const Field& W, const GeometryField& geo) {
  const GridChart& chart = geo.chart();
  const int n = chart.dim(), m = W.components;
  std::vector<double> grad;
  std::vector<std::uint8_t> ok;
  detail::grid_gradient(chart, m, W.values, all_valid(chart.size()), 2, grad, ok);
  std::vector<double> terms(chart.size(), 0.0);
  parallel_for(chart.size(), [&](std::size_t p) {
    if (!usable(geo, p) || !geo.valid(p)) return;
    const PointGeometry& G = geo.at(p);
    double s = 0.0;
    for (int a = 0; a < m; ++a) s += metric_dot(n, G.g_inv, &grad[(p * m + a) * n], &grad[(p * m + a) * n]);
    terms[p] = s * G.sqrt_g;
  });
  return pairwise_sum(terms) * chart.cell_volume();
}

void require_interior_support(const Field& V, const GeometryField& geo, const char* what) {
  for (std::size_t p = 0; p < geo.chart().size(); ++p) {
    if (geo.interior(p)) continue;
    for (int c = 0; c < V.components; ++c)
      if (V.at(p, c) != 0.0)
        throw InvalidInput(std::string(what) + ": support meets nodes without derivative data");
  }
}

}  // namespace

std::pair<double, double> second_variation(const Field& V, const GeometryField& geo, FrameMode mode) {
  const GridChart& chart = geo.chart();
  const int n = chart.dim(), m = geo.m();
  require_compact(V, chart, m, "second_variation");
  require_interior_support(V, geo, "second_variation");
  const double cell = chart.cell_volume();
  std::vector<double> lhs(chart.size(), 0.0);
  parallel_for(chart.size(), [&](std::size_t p) {
    if (!geo.interior(p)) return;
    lhs[p] = hv_square(geo.at(p), &V.values[p * m]) * geo.at(p).sqrt_g;
  });
  const double L = pairwise_sum(lhs) * cell;
  if (mode == FrameMode::parallel_frame) {
    ParallelFrame frame = parallel_normal_frame(geo);
    return {L, gradient_energy(to_parallel(V, frame, m), geo)};
  }
  if (!geo.has_derivatives()) throw PreconditionError("second_variation: general mode needs the normal connection");
  std::vector<double> grad;
  std::vector<std::uint8_t> ok;
  detail::grid_gradient(chart, m, V.values, all_valid(chart.size()), 2, grad, ok);
  std::vector<double> rhs(chart.size(), 0.0);
  parallel_for(chart.size(), [&](std::size_t p) {
    if (!geo.interior(p)) return;
    const PointGeometry& G = geo.at(p);
    auto om = geo.omega_coord(p);
    std::vector<double> w(n * m);  // [b][k] = d_k V^b + sum_a V^a omega_kab
    for (int b = 0; b < m; ++b)
      for (int k = 0; k < n; ++k) {
        double s = grad[(p * m + b) * n + k];
        for (int a = 0; a < m; ++a) s += V.at(p, a) * om[(k * m + a) * m + b];
        w[b * n + k] = s;
      }
    double s = 0.0;
    for (int b = 0; b < m; ++b) s += metric_dot(n, G.g_inv, &w[b * n], &w[b * n]);
    rhs[p] = s * G.sqrt_g;
  });
  return {L, pairwise_sum(rhs) * cell};
}

ComponentwiseReport componentwise_reduction_check(const Field& V, const GeometryField& geo) {
  const GridChart& chart = geo.chart();
  const int m = geo.m();
  require_compact(V, chart, m, "componentwise_reduction_check");
  require_interior_support(V, geo, "componentwise_reduction_check");
  ParallelFrame frame = parallel_normal_frame(geo);
  std::vector<double> lhs(chart.size(), 0.0), curv(chart.size(), 0.0), excess(chart.size(), -0.0);
  parallel_for(chart.size(), [&](std::size_t p) {
    if (!geo.interior(p)) return;
    const PointGeometry& G = geo.at(p);
    const double* v = &V.values[p * m];
    double v2 = 0.0;
    for (int a = 0; a < m; ++a) v2 += v[a] * v[a];
    const double hv = hv_square(G, v);
    excess[p] = hv - v2 * G.A_norm2;
    lhs[p] = hv * G.sqrt_g;
    curv[p] = v2 * G.A_norm2 * G.sqrt_g;
  });
  ComponentwiseReport r;
  const double cell = chart.cell_volume();
  r.max_pointwise_excess = *std::max_element(excess.begin(), excess.end());
  r.lhs = pairwise_sum(lhs) * cell;
  r.curvature_sum = pairwise_sum(curv) * cell;
  r.gradient_sum = gradient_energy(to_parallel(V, frame, m), geo);
  const double scale = std::max(1.0, r.curvature_sum);
  r.pass = r.max_pointwise_excess <= 1e-12 * scale && r.lhs <= r.curvature_sum + 1e-12 * scale &&
           r.curvature_sum <= r.gradient_sum;
  return r;
}

Field random_bump(const GridChart& chart, std::mt19937_64& rng) {
  const int n = chart.dim();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> c(n), w(n);
  for (int a = 0; a < n; ++a) {
    const double lo = chart.lo()[a] + 3.0 * chart.spacing(a), hi = chart.hi()[a] - 3.0 * chart.spacing(a);
    const double L = hi - lo;
    if (!(L > 0.0)) throw InvalidInput("random_bump: chart too small");
    w[a] = std::max((0.15 + 0.3 * unit(rng)) * L, std::min(0.5 * L, 2.0 * chart.spacing(a)));
    c[a] = lo + w[a] + unit(rng) * (L - 2.0 * w[a]);
  }
  Field u(chart, 1, 0.0);
  for (std::size_t p = 0; p < chart.size(); ++p) {
    double v = 1.0;
    for (int a = 0; a < n && v != 0.0; ++a) {
      const double t = (chart.coord(p, a) - c[a]) / w[a];
      v *= std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0;
    }
    u.at(p) = v;
  }
  return u;
}

Field random_normal_field(const GridChart& chart, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  Field V(chart, m, 0.0);
  for (int b = 0; b < m; ++b) {
    Field u = random_bump(chart, rng);
    const double s = amp(rng);
    for (std::size_t p = 0; p < chart.size(); ++p) V.at(p, b) = s * u.at(p);
  }
  return V;
}

StabilityReport stability_probes(const GeometryField& geo, int scalar_pairs, int vector_pairs, std::uint64_t seed,
                                 FrameMode mode) {
  if (scalar_pairs < 0 || vector_pairs < 0) throw InvalidInput("stability_probes: counts must be non-negative");
  std::mt19937_64 rng(seed);
  StabilityReport r;
  r.domain = "probes";
  for (int k = 0; k < scalar_pairs; ++k) r.quadratic_form_pairs.push_back(stability_pair(random_bump(geo.chart(), rng), geo));
  for (int k = 0; k < vector_pairs; ++k)
    r.second_variation_pairs.push_back(second_variation(random_normal_field(geo.chart(), geo.m(), rng), geo, mode));
  return r;
}

}  // namespace mingraph
