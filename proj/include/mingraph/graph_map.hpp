#pragma once

#include <memory>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "mingraph/graph_geometry.hpp"
#include "mingraph/grid.hpp"
#include "mingraph/taylor.hpp"

namespace mingraph {

/// A map f: R^n -> R^m whose graph is studied. Analytic maps expose exact
/// Taylor expansions to order four; sampled maps carry node values on a chart.
class GraphMap {
 public:
  virtual ~GraphMap() = default;

  virtual std::string name() const = 0;
  virtual int domain_dim() const = 0;
  virtual int codim() const = 0;
  virtual bool analytic() const = 0;
  virtual nlohmann::json parameters() const { return nlohmann::json::object(); }

  /// False at singular points and outside the map's domain of definition.
  virtual bool in_domain(std::span<const double> x) const {
    (void)x;
    return true;
  }
  virtual std::vector<double> value(std::span<const double> x) const = 0;

  /// Component-wise Taylor expansion about x to total degree `degree` (analytic maps only).
  virtual std::vector<Taylor> expand(std::span<const double> x, int degree) const;

  /// Derivatives up to `order` (2..4) at x, from expand().
  JetAtPoint jet(std::span<const double> x, int order = 2) const;
};

using GraphMapPtr = std::shared_ptr<const GraphMap>;

/// Helper base for closed-form maps: Derived provides
///   template <class T> std::vector<T> eval(std::span<const T> x) const;
/// and the same code yields values and exact Taylor expansions.
template <class Derived>
class AnalyticGraph : public GraphMap {
 public:
  bool analytic() const override { return true; }

  std::vector<double> value(std::span<const double> x) const override {
    check_point(x);
    return static_cast<const Derived&>(*this).template eval<double>(x);
  }

  std::vector<Taylor> expand(std::span<const double> x, int degree) const override {
    check_point(x);
    const TaylorBasis& basis = TaylorBasis::get(domain_dim(), degree);
    std::vector<Taylor> vars;
    vars.reserve(x.size());
    for (int k = 0; k < domain_dim(); ++k) vars.push_back(Taylor::variable(basis, k, x[k]));
    return static_cast<const Derived&>(*this).template eval<Taylor>(std::span<const Taylor>(vars));
  }

 protected:
  void check_point(std::span<const double> x) const;
};

void throw_outside_domain(const GraphMap& map, std::span<const double> x);

/// Derivatives up to `order` read off component expansions about x.
JetAtPoint jet_from_expansion(std::span<const Taylor> t, std::span<const double> x, int order);

template <class Derived>
void AnalyticGraph<Derived>::check_point(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != domain_dim() || !in_domain(x)) throw_outside_domain(*this, x);
}

/// Node values of a map on a chart (e.g. a solver output or a loaded file).
class SampledGraph : public GraphMap {
 public:
  SampledGraph(GridChart chart, int codim, std::vector<double> values, std::string label = "sampled");

  std::string name() const override { return label_; }
  int domain_dim() const override { return chart_.dim(); }
  int codim() const override { return m_; }
  bool analytic() const override { return false; }

  /// Multilinear interpolation; throws DomainError outside the chart box.
  std::vector<double> value(std::span<const double> x) const override;
  bool in_domain(std::span<const double> x) const override;

  const GridChart& chart() const { return chart_; }
  /// Node-major values, m per node.
  const std::vector<double>& values() const { return values_; }
  double node_value(std::size_t node, int component) const { return values_[node * static_cast<std::size_t>(m_) + static_cast<std::size_t>(component)]; }

 private:
  GridChart chart_;
  int m_;
  std::vector<double> values_;
  std::string label_;
};

/// Samples a map at every node of a chart (nodes outside the map's domain get NaN).
std::shared_ptr<SampledGraph> sample(const GraphMap& map, const GridChart& chart);

}  // namespace mingraph
