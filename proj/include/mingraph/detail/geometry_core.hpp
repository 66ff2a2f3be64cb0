#pragma once

// Scalar-generic pointwise geometry of a graph x -> (x, f(x)). Instantiated
// with double for pointwise values and with Taylor for exact derivatives of
// geometric quantities. Only branch-free operations (+, -, *, /, sqrt) are
// used so both instantiations follow the same arithmetic path.

#include <cmath>
#include <cstddef>
#include <vector>

namespace mingraph::detail {

using std::sqrt;

template <class T>
struct CoreGeometry {
  int n = 0, m = 0;
  std::vector<T> g;        // n x n induced metric
  std::vector<T> g_inv;    // n x n
  T sqrt_g{};
  T star_omega{};          // 1 / sqrt_g
  std::vector<T> tangent;  // n x (n+m), orthonormal
  std::vector<T> normal;   // m x (n+m), orthonormal
  std::vector<T> h_coord;  // m x n x n, <d_a d_b F, nu_alpha> (coordinate tangent indices)
  std::vector<T> a_flux;   // n x n, sqrt_g * g_inv
  T A_norm2{};             // |A|^2 = sum_alpha tr(g^-1 h_alpha g^-1 h_alpha)
};

/// Cholesky factor of an SPD matrix (row-major, lower triangle).
template <class T>
std::vector<T> cholesky(int n, const std::vector<T>& a) {
  std::vector<T> l(static_cast<std::size_t>(n * n), T(0.0));
  for (int j = 0; j < n; ++j) {
    T d = a[j * n + j];
    for (int k = 0; k < j; ++k) d = d - l[j * n + k] * l[j * n + k];
    l[j * n + j] = sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      T s = a[i * n + j];
      for (int k = 0; k < j; ++k) s = s - l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / l[j * n + j];
    }
  }
  return l;
}

/// Inverse of an SPD matrix from its Cholesky factor.
template <class T>
std::vector<T> spd_inverse(int n, const std::vector<T>& l) {
  // Invert L (lower triangular), then A^-1 = L^-T L^-1.
  std::vector<T> li(static_cast<std::size_t>(n * n), T(0.0));
  for (int i = 0; i < n; ++i) {
    li[i * n + i] = T(1.0) / l[i * n + i];
    for (int j = 0; j < i; ++j) {
      T s(0.0);
      for (int k = j; k < i; ++k) s = s + l[i * n + k] * li[k * n + j];
      li[i * n + j] = -s / l[i * n + i];
    }
  }
  std::vector<T> inv(static_cast<std::size_t>(n * n), T(0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      T s(0.0);
      for (int k = i; k < n; ++k) s = s + li[k * n + i] * li[k * n + j];
      inv[i * n + j] = s;
      inv[j * n + i] = s;
    }
  return inv;
}

template <class T>
T dot(const T* a, const T* b, int len) {
  T s(0.0);
  for (int c = 0; c < len; ++c) s = s + a[c] * b[c];
  return s;
}

/// Modified Gram-Schmidt of v against the first `count` rows of `basis`
/// (row length len), applied twice for orthogonality at rounding level.
template <class T>
void orthogonalize(T* v, const std::vector<T>& basis, int count, int len) {
  for (int pass = 0; pass < 2; ++pass)
    for (int r = 0; r < count; ++r) {
      T c = dot(v, &basis[static_cast<std::size_t>(r * len)], len);
      for (int k = 0; k < len; ++k) v[k] = v[k] - c * basis[static_cast<std::size_t>(r * len + k)];
    }
}

template <class T>
void normalize(T* v, int len) {
  T inv_norm = T(1.0) / sqrt(dot(v, v, len));
  for (int k = 0; k < len; ++k) v[k] = v[k] * inv_norm;
}

/// df: m x n, d2f: m x n x n (row-major).
template <class T>
CoreGeometry<T> core_geometry(int n, int m, const std::vector<T>& df, const std::vector<T>& d2f) {
  CoreGeometry<T> geo;
  geo.n = n;
  geo.m = m;
  const int len = n + m;

  geo.g.assign(static_cast<std::size_t>(n * n), T(0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      T s(i == j ? 1.0 : 0.0);
      for (int b = 0; b < m; ++b) s = s + df[b * n + i] * df[b * n + j];
      geo.g[i * n + j] = s;
      geo.g[j * n + i] = s;
    }
  std::vector<T> l = cholesky(n, geo.g);
  geo.sqrt_g = T(1.0);
  for (int i = 0; i < n; ++i) geo.sqrt_g = geo.sqrt_g * l[i * n + i];
  geo.g_inv = spd_inverse(n, l);
  geo.star_omega = T(1.0) / geo.sqrt_g;
  geo.a_flux.resize(static_cast<std::size_t>(n * n));
  for (int k = 0; k < n * n; ++k) geo.a_flux[k] = geo.sqrt_g * geo.g_inv[k];

  // Tangent frame from X_i = d/dx^i + sum_b df[b][i] d/dy^b in index order.
  geo.tangent.assign(static_cast<std::size_t>(n * len), T(0.0));
  for (int i = 0; i < n; ++i) {
    T* v = &geo.tangent[static_cast<std::size_t>(i * len)];
    v[i] = T(1.0);
    for (int b = 0; b < m; ++b) v[n + b] = df[b * n + i];
    orthogonalize(v, geo.tangent, i, len);
    normalize(v, len);
  }
  // Normal frame from the vertical vectors d/dy^alpha projected off the tangent space.
  geo.normal.assign(static_cast<std::size_t>(m * len), T(0.0));
  for (int a = 0; a < m; ++a) {
    T* v = &geo.normal[static_cast<std::size_t>(a * len)];
    v[n + a] = T(1.0);
    orthogonalize(v, geo.tangent, n, len);
    orthogonalize(v, geo.normal, a, len);
    normalize(v, len);
  }

  // d_a d_b F = (0, d2f[.][a][b]) so only vertical components of nu enter.
  geo.h_coord.assign(static_cast<std::size_t>(m * n * n), T(0.0));
  for (int a = 0; a < m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        T s(0.0);
        for (int b = 0; b < m; ++b) s = s + d2f[(b * n + i) * n + j] * geo.normal[static_cast<std::size_t>(a * len + n + b)];
        geo.h_coord[(a * n + i) * n + j] = s;
        geo.h_coord[(a * n + j) * n + i] = s;
      }

  geo.A_norm2 = T(0.0);
  std::vector<T> mixed(static_cast<std::size_t>(n * n));
  for (int a = 0; a < m; ++a) {
    const T* ha = &geo.h_coord[static_cast<std::size_t>(a * n * n)];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        T s(0.0);
        for (int k = 0; k < n; ++k) s = s + geo.g_inv[i * n + k] * ha[k * n + j];
        mixed[i * n + j] = s;
      }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) geo.A_norm2 = geo.A_norm2 + mixed[i * n + j] * mixed[j * n + i];
  }
  return geo;
}

}  // namespace mingraph::detail
