#include "mingraph/taylor.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace mingraph {

namespace {

// Encode a multi-index with digits in base (kMaxTaylorDegree + 1).
int encode(const std::array<int, kMaxTaylorVars>& e) {
  int code = 0;
  for (int v = kMaxTaylorVars - 1; v >= 0; --v) code = code * (kMaxTaylorDegree + 1) + e[v];
  return code;
}

constexpr int kLookupSize = 625;  // (kMaxTaylorDegree + 1)^kMaxTaylorVars

void enumerate(int vars, int total, int var, std::array<int, kMaxTaylorVars>& e,
               std::vector<std::array<int, kMaxTaylorVars>>& out) {
  if (var == vars - 1) {
    e[var] = total;
    out.push_back(e);
    return;
  }
  for (int k = total; k >= 0; --k) {
    e[var] = k;
    enumerate(vars, total - k, var + 1, e, out);
  }
  e[var] = 0;
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

}  // namespace

TaylorBasis::TaylorBasis(int vars, int degree) : vars_(vars), degree_(degree), lookup_(kLookupSize, -1) {
  for (int d = 0; d <= degree; ++d) {
    std::array<int, kMaxTaylorVars> e{};
    if (vars == 0) {
      if (d == 0) exponents_.push_back(e);
    } else {
      enumerate(vars, d, 0, e, exponents_);
    }
    degrees_.resize(exponents_.size(), d);
  }
  size_ = static_cast<int>(exponents_.size());
  for (int d = 0; d <= degree; ++d) {
    prefix_[d] = 0;
    for (int t = 0; t < size_; ++t)
      if (degrees_[t] <= d) prefix_[d] = t + 1;
  }
  for (int t = 0; t < size_; ++t) lookup_[encode(exponents_[t])] = t;
  for (int a = 0; a < size_; ++a) {
    for (int b = 0; b < size_; ++b) {
      if (degrees_[a] + degrees_[b] > degree) continue;
      std::array<int, kMaxTaylorVars> e{};
      for (int v = 0; v < kMaxTaylorVars; ++v)
        e[v] = exponents_[a][v] + exponents_[b][v];
      products_.push_back({a, b, lookup_[encode(e)]});
    }
  }
}

int TaylorBasis::index(const std::array<int, kMaxTaylorVars>& e) const {
  int total = 0;
  for (int v = 0; v < kMaxTaylorVars; ++v) {
    if (e[v] < 0) return -1;
    if (v >= vars_ && e[v] != 0) return -1;
    total += e[v];
  }
  if (total > degree_) return -1;
  return lookup_[encode(e)];
}

const TaylorBasis& TaylorBasis::get(int vars, int degree) {
  if (vars < 0 || vars > kMaxTaylorVars || degree < 0 || degree > kMaxTaylorDegree)
    throw std::invalid_argument("TaylorBasis: unsupported (vars, degree)");
  static std::once_flag once;
  static std::vector<TaylorBasis> table;
  std::call_once(once, [] {
    table.reserve((kMaxTaylorVars + 1) * (kMaxTaylorDegree + 1));
    for (int v = 0; v <= kMaxTaylorVars; ++v)
      for (int d = 0; d <= kMaxTaylorDegree; ++d) table.push_back(TaylorBasis(v, d));
  });
  return table[vars * (kMaxTaylorDegree + 1) + degree];
}

Taylor Taylor::variable(const TaylorBasis& basis, int var, double value) {
  if (var < 0 || var >= basis.vars()) throw std::out_of_range("Taylor::variable: variable index");
  Taylor t(basis, value);
  if (basis.degree() >= 1) {
    std::array<int, kMaxTaylorVars> e{};
    e[var] = 1;
    t.c_[basis.index(e)] = 1.0;
  }
  return t;
}

double Taylor::derivative(const std::array<int, kMaxTaylorVars>& e) const {
  int total = 0;
  double scale = 1.0;
  for (int v = 0; v < kMaxTaylorVars; ++v) {
    total += e[v];
    scale *= factorial(e[v]);
  }
  if (total == 0) return c_[0];
  if (!basis_ || total > basis_->degree()) {
    if (!basis_) return 0.0;
    throw std::out_of_range("Taylor::derivative: order exceeds truncation degree");
  }
  int t = basis_->index(e);
  if (t < 0) throw std::out_of_range("Taylor::derivative: bad multi-index");
  return scale * c_[t];
}

double Taylor::gradient(int var) const {
  std::array<int, kMaxTaylorVars> e{};
  e[var] = 1;
  return derivative(e);
}

double Taylor::hessian(int a, int b) const {
  std::array<int, kMaxTaylorVars> e{};
  e[a] += 1;
  e[b] += 1;
  return derivative(e);
}

Taylor Taylor::diff(int var) const {
  if (!basis_) return Taylor(0.0);
  if (basis_->degree() == 0) throw std::logic_error("Taylor::diff: degree-zero series has no derivative information");
  const TaylorBasis& out_basis = TaylorBasis::get(basis_->vars(), basis_->degree() - 1);
  Taylor r(out_basis, 0.0);
  for (int t = 0; t < basis_->size(); ++t) {
    auto e = basis_->exponent(t);
    int k = e[var];
    if (k == 0) continue;
    e[var] = k - 1;
    r.c_[out_basis.index(e)] += k * c_[t];
  }
  return r;
}

Taylor Taylor::truncate(int d) const {
  if (!basis_ || d >= basis_->degree()) return *this;
  const TaylorBasis& out_basis = TaylorBasis::get(basis_->vars(), d);
  Taylor r(out_basis, 0.0);
  for (int t = 0; t < out_basis.size(); ++t) r.c_[t] = c_[t];
  return r;
}

void Taylor::adopt(const Taylor& o) {
  if (!o.basis_) return;
  if (!basis_) {
    basis_ = o.basis_;
    return;
  }
  if (basis_->vars() != o.basis_->vars()) throw std::invalid_argument("Taylor: mixing series in different variable counts");
  if (o.basis_->degree() < basis_->degree()) {
    int keep = o.basis_->size();
    for (int t = keep; t < basis_->size(); ++t) c_[t] = 0.0;
    basis_ = o.basis_;
  }
}

Taylor& Taylor::operator+=(const Taylor& o) {
  adopt(o);
  int n = size();
  for (int t = 0; t < n && t < o.size(); ++t) c_[t] += o.c_[t];
  return *this;
}

Taylor& Taylor::operator-=(const Taylor& o) {
  adopt(o);
  int n = size();
  for (int t = 0; t < n && t < o.size(); ++t) c_[t] -= o.c_[t];
  return *this;
}

Taylor& Taylor::operator*=(double s) {
  int n = size();
  for (int t = 0; t < n; ++t) c_[t] *= s;
  return *this;
}

Taylor Taylor::operator-() const {
  Taylor r = *this;
  r *= -1.0;
  return r;
}

Taylor operator*(const Taylor& a, const Taylor& b) {
  if (!a.basis_) return b * a.c_[0];
  if (!b.basis_) return a * b.c_[0];
  if (a.basis_->vars() != b.basis_->vars()) throw std::invalid_argument("Taylor: mixing series in different variable counts");
  const TaylorBasis* basis = a.basis_->degree() <= b.basis_->degree() ? a.basis_ : b.basis_;
  Taylor r(*basis, 0.0);
  for (const auto& p : basis->products())
    r.c_[p.out] += a.c_[p.lhs] * b.c_[p.rhs];
  return r;
}

Taylor& Taylor::operator*=(const Taylor& o) { return *this = *this * o; }

Taylor operator/(const Taylor& a, const Taylor& b) {
  if (!b.basis_) return a * (1.0 / b.c_[0]);
  return a * pow(b, -1.0);
}

Taylor& Taylor::operator/=(const Taylor& o) { return *this = *this / o; }

Taylor Taylor::compose(std::span<const double> k) const {
  int d = degree();
  if (static_cast<int>(k.size()) < d + 1) throw std::invalid_argument("Taylor::compose: too few coefficients");
  Taylor delta = *this;
  delta.c_[0] = 0.0;
  Taylor r(k[d]);
  if (basis_) r.basis_ = basis_;
  for (int j = d - 1; j >= 0; --j) {
    r = r * delta;
    r.c_[0] += k[j];
  }
  return r;
}

Taylor pow(const Taylor& u, double r) {
  double u0 = u.value();
  std::array<double, kMaxTaylorDegree + 1> k{};
  double binom = 1.0;
  for (int j = 0; j <= u.degree(); ++j) {
    k[j] = binom * std::pow(u0, r - j);
    binom *= (r - j) / (j + 1);
  }
  return u.compose(std::span<const double>(k.data(), u.degree() + 1));
}

Taylor sqrt(const Taylor& u) { return pow(u, 0.5); }

Taylor exp(const Taylor& u) {
  double e0 = std::exp(u.value());
  std::array<double, kMaxTaylorDegree + 1> k{};
  for (int j = 0; j <= u.degree(); ++j) k[j] = e0 / factorial(j);
  return u.compose(std::span<const double>(k.data(), u.degree() + 1));
}

Taylor log(const Taylor& u) {
  double u0 = u.value();
  std::array<double, kMaxTaylorDegree + 1> k{};
  k[0] = std::log(u0);
  for (int j = 1; j <= u.degree(); ++j) k[j] = ((j % 2 == 1) ? 1.0 : -1.0) / (j * std::pow(u0, j));
  return u.compose(std::span<const double>(k.data(), u.degree() + 1));
}

Taylor sin(const Taylor& u) {
  double s = std::sin(u.value()), c = std::cos(u.value());
  const double cycle[4] = {s, c, -s, -c};
  std::array<double, kMaxTaylorDegree + 1> k{};
  for (int j = 0; j <= u.degree(); ++j) k[j] = cycle[j % 4] / factorial(j);
  return u.compose(std::span<const double>(k.data(), u.degree() + 1));
}

Taylor cos(const Taylor& u) {
  double s = std::sin(u.value()), c = std::cos(u.value());
  const double cycle[4] = {c, -s, -c, s};
  std::array<double, kMaxTaylorDegree + 1> k{};
  for (int j = 0; j <= u.degree(); ++j) k[j] = cycle[j % 4] / factorial(j);
  return u.compose(std::span<const double>(k.data(), u.degree() + 1));
}

}  // namespace mingraph
