#include "mingraph/example_catalog.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "mingraph/errors.hpp"

namespace mingraph {

namespace {

using std::cos;
using std::log;
using std::sqrt;

class LinearGraph final : public AnalyticGraph<LinearGraph> {
 public:
  LinearGraph(int m, int n, std::vector<double> b) : m_(m), n_(n), b_(std::move(b)) {
    if (m < 1 || n < 1 || n > kMaxTaylorVars) throw InvalidInput("linear: need 1 <= n <= 4 and m >= 1");
    if (static_cast<int>(b_.size()) != m * n) throw InvalidInput("linear: matrix must have m*n entries");
    for (double v : b_)
      if (!std::isfinite(v)) throw InvalidInput("linear: matrix entries must be finite");
  }
  std::string name() const override { return "linear"; }
  int domain_dim() const override { return n_; }
  int codim() const override { return m_; }
  nlohmann::json parameters() const override { return {{"m", m_}, {"n", n_}, {"matrix", b_}}; }

  template <class T>
  std::vector<T> eval(std::span<const T> x) const {
    std::vector<T> out(static_cast<std::size_t>(m_), T(0.0));
    for (int b = 0; b < m_; ++b)
      for (int i = 0; i < n_; ++i) out[b] = out[b] + b_[b * n_ + i] * x[i];
    return out;
  }

 private:
  int m_, n_;
  std::vector<double> b_;
};

template <class T>
T scherk_height(const T& x, const T& y) {
  return log(cos(x)) - log(cos(y));
}

void check_scherk_box(double half_width) {
  if (!(half_width > 0.0) || half_width >= 0.5 * std::numbers::pi)
    throw DomainError("scherk: the box must lie strictly inside (-pi/2, pi/2)^2; half_width = " + std::to_string(half_width));
}

bool inside_scherk_strip(double v) { return std::abs(v) < 0.5 * std::numbers::pi - 1e-6; }

class ScherkGraph final : public AnalyticGraph<ScherkGraph> {
 public:
  explicit ScherkGraph(double half_width) : half_width_(half_width) { check_scherk_box(half_width); }
  std::string name() const override { return "scherk"; }
  int domain_dim() const override { return 2; }
  int codim() const override { return 1; }
  nlohmann::json parameters() const override { return {{"half_width", half_width_}}; }
  bool in_domain(std::span<const double> x) const override {
    return x.size() == 2 && inside_scherk_strip(x[0]) && inside_scherk_strip(x[1]);
  }

  template <class T>
  std::vector<T> eval(std::span<const T> x) const {
    return {scherk_height(x[0], x[1])};
  }

 private:
  double half_width_;
};

class ScherkProductGraph final : public AnalyticGraph<ScherkProductGraph> {
 public:
  explicit ScherkProductGraph(double half_width) : half_width_(half_width) { check_scherk_box(half_width); }
  std::string name() const override { return "scherk_product"; }
  int domain_dim() const override { return 4; }
  int codim() const override { return 2; }
  nlohmann::json parameters() const override { return {{"half_width", half_width_}}; }
  bool in_domain(std::span<const double> x) const override {
    if (x.size() != 4) return false;
    for (double v : x)
      if (!inside_scherk_strip(v)) return false;
    return true;
  }

  template <class T>
  std::vector<T> eval(std::span<const T> x) const {
    return {scherk_height(x[0], x[1]), scherk_height(x[2], x[3])};
  }

 private:
  double half_width_;
};

class HolomorphicGraph final : public AnalyticGraph<HolomorphicGraph> {
 public:
  explicit HolomorphicGraph(std::vector<std::complex<double>> c) : c_(std::move(c)) {
    if (c_.empty()) throw InvalidInput("holomorphic: at least one coefficient is required");
  }
  std::string name() const override { return "holomorphic"; }
  int domain_dim() const override { return 2; }
  int codim() const override { return 2; }
  nlohmann::json parameters() const override {
    nlohmann::json coeffs = nlohmann::json::array();
    for (const auto& c : c_) coeffs.push_back({c.real(), c.imag()});
    return {{"coefficients", coeffs}};
  }

  template <class T>
  std::vector<T> eval(std::span<const T> x) const {
    // Horner in complex arithmetic on (re, im) pairs.
    T re(c_.back().real()), im(c_.back().imag());
    for (int k = static_cast<int>(c_.size()) - 2; k >= 0; --k) {
      T nre = re * x[0] - im * x[1] + T(c_[k].real());
      T nim = re * x[1] + im * x[0] + T(c_[k].imag());
      re = nre;
      im = nim;
    }
    return {re, im};
  }

 private:
  std::vector<std::complex<double>> c_;
};

class LawsonOssermanGraph final : public AnalyticGraph<LawsonOssermanGraph> {
 public:
  LawsonOssermanGraph(double inner, double outer, double scale) : inner_(inner), outer_(outer), scale_(scale) {
    if (!(inner > 0.0) || !(outer > inner)) throw DomainError("lawson_osserman: need 0 < inner_radius < outer_radius");
  }
  std::string name() const override { return "lawson_osserman"; }
  int domain_dim() const override { return 4; }
  int codim() const override { return 3; }
  nlohmann::json parameters() const override {
    return {{"inner_radius", inner_}, {"outer_radius", outer_}, {"scale", scale_}};
  }
  bool in_domain(std::span<const double> x) const override {
    if (x.size() != 4) return false;
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return r2 >= inner_ * inner_ && r2 <= outer_ * outer_;
  }

  template <class T>
  std::vector<T> eval(std::span<const T> x) const {
    // Hopf map on C^2 with z1 = x1 + i x2, z2 = x3 + i x4; homogeneous of degree 2.
    T eta0 = x[0] * x[0] + x[1] * x[1] - x[2] * x[2] - x[3] * x[3];
    T eta1 = 2.0 * (x[0] * x[2] + x[1] * x[3]);
    T eta2 = 2.0 * (x[1] * x[2] - x[0] * x[3]);
    T r = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    T s = T(scale_) / r;
    return {s * eta0, s * eta1, s * eta2};
  }

 private:
  double inner_, outer_, scale_;
};

class ParaboloidGraph final : public AnalyticGraph<ParaboloidGraph> {
 public:
  std::string name() const override { return "paraboloid_control"; }
  int domain_dim() const override { return 2; }
  int codim() const override { return 2; }

  template <class T>
  std::vector<T> eval(std::span<const T> x) const {
    return {x[0] * x[0] + x[1] * x[1], x[0] * x[1]};
  }
};

void reject_unknown_keys(const std::string& name, const nlohmann::json& params, const std::set<std::string>& allowed) {
  if (!params.is_object()) throw InvalidInput("example '" + name + "': parameters must be a JSON object");
  for (const auto& [key, value] : params.items()) {
    (void)value;
    if (!allowed.count(key)) throw InvalidInput("example '" + name + "': unknown parameter '" + key + "'");
  }
}

}  // namespace

GraphMapPtr make_linear(int m, int n, std::vector<double> b) { return std::make_shared<LinearGraph>(m, n, std::move(b)); }

GraphMapPtr make_scherk(double half_width) { return std::make_shared<ScherkGraph>(half_width); }

GraphMapPtr make_scherk_product(double half_width) { return std::make_shared<ScherkProductGraph>(half_width); }

GraphMapPtr make_holomorphic(std::vector<std::complex<double>> coefficients) {
  return std::make_shared<HolomorphicGraph>(std::move(coefficients));
}

GraphMapPtr make_lawson_osserman(double inner_radius, double outer_radius, double scale) {
  return std::make_shared<LawsonOssermanGraph>(inner_radius, outer_radius, scale);
}

GraphMapPtr make_paraboloid_control() { return std::make_shared<ParaboloidGraph>(); }

std::vector<std::string> example_names() {
  return {"linear", "scherk", "scherk_product", "holomorphic", "lawson_osserman", "paraboloid_control"};
}

GraphMapPtr make_example(const std::string& name, const nlohmann::json& params_in) {
  const nlohmann::json params = params_in.is_null() ? nlohmann::json::object() : params_in;
  try {
    if (name == "linear") {
      reject_unknown_keys(name, params, {"m", "n", "matrix"});
      int m = params.value("m", 2), n = params.value("n", 2);
      std::vector<double> b = params.value("matrix", std::vector<double>{});
      if (b.empty()) {
        b.assign(static_cast<std::size_t>(m * n), 0.0);
        for (int k = 0; k < m * n; ++k) b[k] = 0.25 * ((k % 3) - 1) + 0.1 * k;
      }
      return make_linear(m, n, std::move(b));
    }
    if (name == "scherk") {
      reject_unknown_keys(name, params, {"half_width"});
      return make_scherk(params.value("half_width", 1.2));
    }
    if (name == "scherk_product") {
      reject_unknown_keys(name, params, {"half_width"});
      return make_scherk_product(params.value("half_width", 1.2));
    }
    if (name == "holomorphic") {
      reject_unknown_keys(name, params, {"coefficients"});
      std::vector<std::complex<double>> c;
      if (params.contains("coefficients")) {
        for (const auto& entry : params.at("coefficients")) {
          if (entry.is_number()) {
            c.emplace_back(entry.get<double>(), 0.0);
          } else {
            auto pair = entry.get<std::vector<double>>();
            if (pair.size() != 2) throw InvalidInput("holomorphic: each coefficient is a number or [re, im]");
            c.emplace_back(pair[0], pair[1]);
          }
        }
      } else {
        c = {0.0, 0.0, 1.0};  // z^2
      }
      return make_holomorphic(std::move(c));
    }
    if (name == "lawson_osserman") {
      reject_unknown_keys(name, params, {"inner_radius", "outer_radius", "scale"});
      return make_lawson_osserman(params.value("inner_radius", 0.5), params.value("outer_radius", 2.0),
                                  params.value("scale", 0.5 * std::sqrt(5.0)));
    }
    if (name == "paraboloid_control") {
      reject_unknown_keys(name, params, {});
      return make_paraboloid_control();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("example '" + name + "': bad parameter value: " + e.what());
  }
  throw InvalidInput("unknown example '" + name + "'");
}

GridChart default_chart(const std::string& name, const nlohmann::json& params) {
  if (name == "linear") {
    int n = params.is_object() ? params.value("n", 2) : 2;
    return GridChart::cube(n, 1.0, n <= 2 ? 65 : 13);
  }
  if (name == "scherk") return GridChart::cube(2, 1.0, 129);
  if (name == "scherk_product") return GridChart::cube(4, 1.0, 13);
  if (name == "holomorphic" || name == "paraboloid_control") return GridChart::cube(2, 1.0, 129);
  if (name == "lawson_osserman") return GridChart::cube(4, 1.2, 13);
  throw InvalidInput("unknown example '" + name + "'");
}

std::string singular_set(const std::string& name) {
  if (name == "scherk" || name == "scherk_product") return "coordinate lines |x_i| = pi/2";
  if (name == "lawson_osserman") return "origin (cone vertex); evaluation restricted to the shell inner_radius <= |x| <= outer_radius";
  return "none";
}

}  // namespace mingraph
