#pragma once

// Truncated multivariate Taylor series in up to four variables and up to
// total degree four. Used as the scalar type for the analytic derivative
// providers and for exact second-order propagation through the pointwise
// geometry.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mingraph {

inline constexpr int kMaxTaylorVars = 4;
inline constexpr int kMaxTaylorDegree = 4;
inline constexpr int kTaylorCapacity = 70;  // C(4 + 4, 4)

/// Monomial basis in graded-lexicographic order. Bases of the same variable
/// count are nested: the terms of degree <= d form a prefix of any basis of
/// higher degree, so truncation is a prefix copy.
class TaylorBasis {
 public:
  struct Product {
    int lhs, rhs, out;
  };

  int vars() const { return vars_; }
  int degree() const { return degree_; }
  int size() const { return size_; }
  /// Number of terms with total degree <= d.
  int prefix(int d) const { return prefix_[d]; }
  const std::array<int, kMaxTaylorVars>& exponent(int term) const { return exponents_[term]; }
  int term_degree(int term) const { return degrees_[term]; }
  /// Term index of a multi-index, or -1 when out of range.
  int index(const std::array<int, kMaxTaylorVars>& e) const;
  const std::vector<Product>& products() const { return products_; }

  /// Shared, immutable basis for (vars, degree).
  static const TaylorBasis& get(int vars, int degree);

 private:
  TaylorBasis(int vars, int degree);

  int vars_;
  int degree_;
  int size_;
  std::array<int, kMaxTaylorDegree + 2> prefix_{};
  std::vector<std::array<int, kMaxTaylorVars>> exponents_;
  std::vector<int> degrees_;
  std::vector<int> lookup_;
  std::vector<Product> products_;
};

/// A truncated power series around an expansion point. Coefficients are in
/// the monomial basis: c[e] multiplies d^e = d1^e1 ... dn^en, so the partial
/// derivative of multi-index e at the expansion point is e! c[e].
///
/// A series without a basis is a pure constant and adopts the basis of the
/// other operand in arithmetic.
class Taylor {
 public:
  Taylor() = default;
  Taylor(double constant) { c_[0] = constant; }  // NOLINT(google-explicit-constructor)
  Taylor(const TaylorBasis& basis, double constant) : basis_(&basis) { c_[0] = constant; }

  /// The coordinate function x_var = value + d_var.
  static Taylor variable(const TaylorBasis& basis, int var, double value);

  const TaylorBasis* basis() const { return basis_; }
  int degree() const { return basis_ ? basis_->degree() : 0; }
  int size() const { return basis_ ? basis_->size() : 1; }

  double value() const { return c_[0]; }
  double coeff(int term) const { return c_[term]; }
  double& coeff(int term) { return c_[term]; }
  /// First partial derivative at the expansion point.
  double gradient(int var) const;
  /// Second partial derivative at the expansion point.
  double hessian(int a, int b) const;
  /// Partial derivative for an arbitrary multi-index (entries summing to at most degree()).
  double derivative(const std::array<int, kMaxTaylorVars>& e) const;

  /// d/dx_var; the result has degree one less.
  Taylor diff(int var) const;
  /// Keep terms of degree <= d.
  Taylor truncate(int d) const;

  Taylor& operator+=(const Taylor& o);
  Taylor& operator-=(const Taylor& o);
  Taylor& operator*=(const Taylor& o);
  Taylor& operator/=(const Taylor& o);
  Taylor& operator*=(double s);
  Taylor operator-() const;

  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
  friend Taylor operator*(const Taylor& a, const Taylor& b);
  friend Taylor operator/(const Taylor& a, const Taylor& b);
  friend Taylor operator*(Taylor a, double s) { return a *= s; }
  friend Taylor operator*(double s, Taylor a) { return a *= s; }

  /// Compose a univariate function given its Taylor coefficients
  /// phi^(k)(value)/k!, k = 0..degree().
  Taylor compose(std::span<const double> taylor_coeffs) const;

 private:
  const TaylorBasis* basis_ = nullptr;
  std::array<double, kTaylorCapacity> c_{};

  void adopt(const Taylor& o);
};

Taylor sqrt(const Taylor& u);
Taylor pow(const Taylor& u, double r);
Taylor exp(const Taylor& u);
Taylor log(const Taylor& u);
Taylor sin(const Taylor& u);
Taylor cos(const Taylor& u);

}  // namespace mingraph
