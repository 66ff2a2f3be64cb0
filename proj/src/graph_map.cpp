#include "mingraph/graph_map.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mingraph/errors.hpp"
#include "mingraph/parallel.hpp"

namespace mingraph {

std::vector<Taylor> GraphMap::expand(std::span<const double> x, int degree) const {
  (void)x;
  (void)degree;
  throw PreconditionError("map '" + name() + "' is sampled; exact derivatives are unavailable");
}

JetAtPoint GraphMap::jet(std::span<const double> x, int order) const {
  if (order < 2 || order > kMaxTaylorDegree) throw InvalidInput("GraphMap::jet: order must be in [2, 4]");
  std::vector<Taylor> t = expand(x, order);
  return jet_from_expansion(t, x, order);
}

JetAtPoint jet_from_expansion(std::span<const Taylor> t, std::span<const double> x, int order) {
  const int n = static_cast<int>(x.size()), m = static_cast<int>(t.size());
  if (order < 2 || order > kMaxTaylorDegree) throw InvalidInput("jet_from_expansion: order must be in [2, 4]");
  for (const Taylor& c : t)
    if (c.degree() < order) throw InvalidInput("jet_from_expansion: expansion degree is below the requested order");
  JetAtPoint jet;
  jet.n = n;
  jet.m = m;
  jet.x.assign(x.begin(), x.end());
  jet.f.resize(m);
  jet.df.resize(m * n);
  jet.d2f.resize(m * n * n);
  if (order >= 3) jet.d3f.resize(m * n * n * n);
  if (order >= 4) jet.d4f.resize(m * n * n * n * n);
  for (int b = 0; b < m; ++b) {
    const Taylor& fb = t[b];
    jet.f[b] = fb.value();
    for (int i = 0; i < n; ++i) {
      jet.df[b * n + i] = fb.gradient(i);
      for (int j = 0; j < n; ++j) {
        jet.d2f[(b * n + i) * n + j] = fb.hessian(i, j);
        for (int k = 0; order >= 3 && k < n; ++k) {
          std::array<int, kMaxTaylorVars> e{};
          ++e[i], ++e[j], ++e[k];
          jet.d3f[((b * n + i) * n + j) * n + k] = fb.derivative(e);
          for (int l = 0; order >= 4 && l < n; ++l) {
            auto e4 = e;
            ++e4[l];
            jet.d4f[(((b * n + i) * n + j) * n + k) * n + l] = fb.derivative(e4);
          }
        }
      }
    }
  }
  return jet;
}

void throw_outside_domain(const GraphMap& map, std::span<const double> x) {
  std::ostringstream os;
  os << "map '" << map.name() << "' cannot be evaluated at (";
  for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
  os << "): outside its domain or too near a singular point";
  throw DomainError(os.str());
}

SampledGraph::SampledGraph(GridChart chart, int codim, std::vector<double> values, std::string label)
    : chart_(std::move(chart)), m_(codim), values_(std::move(values)), label_(std::move(label)) {
  if (m_ < 1) throw InvalidInput("SampledGraph: codimension must be positive");
  if (values_.size() != chart_.size() * static_cast<std::size_t>(m_))
    throw InvalidInput("SampledGraph: value array does not match chart size times codimension");
}

bool SampledGraph::in_domain(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != chart_.dim()) return false;
  for (int a = 0; a < chart_.dim(); ++a)
    if (x[a] < chart_.lo()[a] || x[a] > chart_.hi()[a]) return false;
  return true;
}

std::vector<double> SampledGraph::value(std::span<const double> x) const {
  if (!in_domain(x)) throw_outside_domain(*this, x);
  const int n = chart_.dim();
  std::vector<int> base(static_cast<std::size_t>(n));
  std::vector<double> frac(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    double t = (x[a] - chart_.lo()[a]) / chart_.spacing(a);
    int i = std::min(static_cast<int>(std::floor(t)), chart_.count()[a] - 2);
    base[a] = i;
    frac[a] = t - i;
  }
  std::vector<double> out(static_cast<std::size_t>(m_), 0.0);
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    std::size_t node = 0;
    for (int a = 0; a < n; ++a) {
      int bit = (corner >> a) & 1;
      w *= bit ? frac[a] : 1.0 - frac[a];
      node += static_cast<std::size_t>(base[a] + bit) * chart_.stride(a);
    }
    if (w == 0.0) continue;
    for (int b = 0; b < m_; ++b) out[b] += w * node_value(node, b);
  }
  return out;
}

std::shared_ptr<SampledGraph> sample(const GraphMap& map, const GridChart& chart) {
  if (chart.dim() != map.domain_dim()) throw InvalidInput("sample: chart dimension does not match the map");
  const int m = map.codim();
  std::vector<double> values(chart.size() * static_cast<std::size_t>(m), std::numeric_limits<double>::quiet_NaN());
  parallel_for(chart.size(), [&](std::size_t p) {
    std::vector<double> x = chart.point(p);
    if (!map.in_domain(x)) return;
    std::vector<double> v = map.value(x);
    for (int b = 0; b < m; ++b) values[p * static_cast<std::size_t>(m) + static_cast<std::size_t>(b)] = v[b];
  });
  return std::make_shared<SampledGraph>(chart, m, std::move(values), map.name());
}

}  // namespace mingraph
