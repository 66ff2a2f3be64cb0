#include "mingraph/detail/stencils.hpp"

#include <limits>
#include <vector>

#include "mingraph/detail/geometry_core.hpp"
#include "mingraph/parallel.hpp"

namespace mingraph::detail {

namespace {

struct Weights {
  int first;  // offset of the first point
  int count;
  double w[6];
};

// Interior and left-face weights; right-face weights are mirrored.
constexpr Weights kD1o2Central{-1, 3, {-0.5, 0.0, 0.5}};
constexpr Weights kD1o2Face0{0, 3, {-1.5, 2.0, -0.5}};
constexpr Weights kD1o4Central{-2, 5, {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12}};
constexpr Weights kD1o4Face0{0, 5, {-25.0 / 12, 48.0 / 12, -36.0 / 12, 16.0 / 12, -3.0 / 12}};
constexpr Weights kD1o4Face1{-1, 5, {-3.0 / 12, -10.0 / 12, 18.0 / 12, -6.0 / 12, 1.0 / 12}};

constexpr Weights kD2o2Central{-1, 3, {1.0, -2.0, 1.0}};
constexpr Weights kD2o2Face0{0, 4, {2.0, -5.0, 4.0, -1.0}};
constexpr Weights kD2o4Central{-2, 5, {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12}};
constexpr Weights kD2o4Face0{0, 6, {45.0 / 12, -154.0 / 12, 214.0 / 12, -156.0 / 12, 61.0 / 12, -10.0 / 12}};
constexpr Weights kD2o4Face1{-1, 6, {10.0 / 12, -15.0 / 12, -4.0 / 12, 14.0 / 12, -6.0 / 12, 1.0 / 12}};

bool emit(const GridChart& chart, std::size_t node, int axis, const Weights& w, bool mirror, double sign, double scale,
          Stencil& out) {
  const int i = chart.axis_index(node, axis), len = chart.count()[axis];
  out.size = 0;
  for (int t = 0; t < w.count; ++t) {
    int off = w.first + t;
    if (mirror) off = -off;
    if (i + off < 0 || i + off >= len) return false;
    if (w.w[t] != 0.0) out.add(chart.shifted(node, axis, off), sign * w.w[t] * scale);
  }
  return true;
}

bool choose(const GridChart& chart, std::size_t node, int axis, const Weights& central, const Weights* face0,
            const Weights* face1, int reach, double odd_sign, double scale, Stencil& out) {
  const int i = chart.axis_index(node, axis), len = chart.count()[axis];
  if (i >= reach && i <= len - 1 - reach) return emit(chart, node, axis, central, false, 1.0, scale, out);
  // Distance to the nearer face decides the one-sided stencil.
  const bool right = i > len - 1 - i;
  const int d = right ? len - 1 - i : i;
  const Weights* w = d == 0 ? face0 : face1;
  if (!w) return false;
  return emit(chart, node, axis, *w, right, right ? odd_sign : 1.0, scale, out);
}

}  // namespace

bool first_derivative_stencil(const GridChart& chart, std::size_t node, int axis, int order, Stencil& out) {
  const double s = 1.0 / chart.spacing(axis);
  if (order == 2) return choose(chart, node, axis, kD1o2Central, &kD1o2Face0, nullptr, 1, -1.0, s, out);
  if (order == 4) return choose(chart, node, axis, kD1o4Central, &kD1o4Face0, &kD1o4Face1, 2, -1.0, s, out);
  return false;
}

bool second_derivative_stencil(const GridChart& chart, std::size_t node, int axis, int order, Stencil& out) {
  const double h = chart.spacing(axis), s = 1.0 / (h * h);
  if (order == 2) return choose(chart, node, axis, kD2o2Central, &kD2o2Face0, nullptr, 1, 1.0, s, out);
  if (order == 4) return choose(chart, node, axis, kD2o4Central, &kD2o4Face0, &kD2o4Face1, 2, 1.0, s, out);
  return false;
}

bool stencil_valid(const Stencil& s, const std::vector<std::uint8_t>& valid) {
  for (const auto& t : s)
    if (!valid[t.node]) return false;
  return true;
}

void apply_stencil(const Stencil& s, const double* data, int comps, double* out) {
  for (int c = 0; c < comps; ++c) out[c] = 0.0;
  for (const auto& t : s)
    for (int c = 0; c < comps; ++c) out[c] += t.weight * data[t.node * comps + c];
}

void grid_gradient(const GridChart& chart, int comps, const std::vector<double>& data,
                   const std::vector<std::uint8_t>& valid, int order, std::vector<double>& grad,
                   std::vector<std::uint8_t>& ok) {
  const int n = chart.dim();
  const std::size_t stride = static_cast<std::size_t>(comps) * n;
  grad.assign(chart.size() * stride, std::numeric_limits<double>::quiet_NaN());
  ok.assign(chart.size(), 0);
  parallel_for(chart.size(), [&](std::size_t p) {
    if (!valid[p]) return;
    std::vector<double> d(comps);
    Stencil s;
    for (int i = 0; i < n; ++i) {
      if (!first_derivative_stencil(chart, p, i, order, s) || !stencil_valid(s, valid)) return;
    }
    for (int i = 0; i < n; ++i) {
      first_derivative_stencil(chart, p, i, order, s);
      apply_stencil(s, data.data(), comps, d.data());
      for (int c = 0; c < comps; ++c) grad[p * stride + c * n + i] = d[c];
    }
    ok[p] = 1;
  });
}

bool neighborhood_valid(const GridChart& chart, std::size_t node, int r, const std::vector<std::uint8_t>& valid) {
  const int n = chart.dim();
  std::vector<int> lo(n), hi(n), idx(n);
  for (int a = 0; a < n; ++a) {
    int i = chart.axis_index(node, a);
    if (i - r < 0 || i + r >= chart.count()[a]) return false;
    lo[a] = i - r;
    hi[a] = i + r;
    idx[a] = lo[a];
  }
  while (true) {
    std::size_t q = 0;
    for (int a = 0; a < n; ++a) q += static_cast<std::size_t>(idx[a]) * chart.stride(a);
    if (!valid[q]) return false;
    int a = n - 1;
    while (a >= 0 && idx[a] == hi[a]) {
      idx[a] = lo[a];
      --a;
    }
    if (a < 0) return true;
    ++idx[a];
  }
}

void flux_coefficients(int n, int m, const double* P, double* a, double* g_inv, double* sqrt_g) {
  std::vector<double> g(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = i == j ? 1.0 : 0.0;
      for (int b = 0; b < m; ++b) s += P[b * n + i] * P[b * n + j];
      g[i * n + j] = g[j * n + i] = s;
    }
  std::vector<double> l = cholesky(n, g);
  double sg = 1.0;
  for (int i = 0; i < n; ++i) sg *= l[i * n + i];
  std::vector<double> gi = spd_inverse(n, l);
  for (int k = 0; k < n * n; ++k) {
    g_inv[k] = gi[k];
    a[k] = sg * gi[k];
  }
  *sqrt_g = sg;
}

void flux_jacobian(int n, int m, const double* P, const double* g_inv, double sqrt_g, double* da) {
  // With v = g^{-1} P^b:  d a_ij / d P^b_k = sqrt_g (v_k g^ij - g^ik v_j - v_i g^kj).
  std::vector<double> v(n);
  for (int b = 0; b < m; ++b) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += g_inv[i * n + c] * P[b * n + c];
      v[i] = s;
    }
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          da[((b * n + k) * n + i) * n + j] =
              sqrt_g * (v[k] * g_inv[i * n + j] - g_inv[i * n + k] * v[j] - v[i] * g_inv[k * n + j]);
  }
}

double compact_divergence(const GridChart& chart, std::size_t node, const double* a, const double* u, int comps,
                          int comp, const double* grad) {
  const int n = chart.dim();
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  double diag = 0.0, mixed = 0.0;
  const double up = u[node * comps + comp];
  for (int i = 0; i < n; ++i) {
    const double h = chart.spacing(i);
    const std::size_t qp = chart.shifted(node, i, 1), qm = chart.shifted(node, i, -1);
    const double aii = a[node * nn + i * n + i];
    const double ap = 0.5 * (aii + a[qp * nn + i * n + i]);
    const double am = 0.5 * (aii + a[qm * nn + i * n + i]);
    diag += (ap * (u[qp * comps + comp] - up) - am * (up - u[qm * comps + comp])) / (h * h);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double gp = grad[(qp * comps + comp) * n + j], gm = grad[(qm * comps + comp) * n + j];
      mixed += (a[qp * nn + i * n + j] * gp - a[qm * nn + i * n + j] * gm) / (2.0 * h);
    }
  }
  return diag + mixed;
}

}  // namespace mingraph::detail
