#include "mingraph/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mingraph/errors.hpp"

namespace mingraph {

GridChart::GridChart(std::vector<double> lo, std::vector<double> hi, std::vector<int> count)
    : lo_(std::move(lo)), hi_(std::move(hi)), count_(std::move(count)) {
  int n = static_cast<int>(count_.size());
  if (n < 1 || lo_.size() != count_.size() || hi_.size() != count_.size())
    throw InvalidInput("GridChart: box and resolution must have the same nonzero dimension");
  spacing_.resize(count_.size());
  stride_.resize(count_.size());
  size_ = 1;
  for (int a = n - 1; a >= 0; --a) {
    if (count_[a] < kMinNodesPerAxis)
      throw InvalidInput("GridChart: at least " + std::to_string(kMinNodesPerAxis) + " nodes per axis are required");
    if (!(hi_[a] > lo_[a]) || !std::isfinite(lo_[a]) || !std::isfinite(hi_[a]))
      throw InvalidInput("GridChart: each axis needs finite min < max");
    spacing_[a] = (hi_[a] - lo_[a]) / (count_[a] - 1);
    stride_[a] = size_;
    size_ *= static_cast<std::size_t>(count_[a]);
  }
}

GridChart GridChart::cube(int n, double half_width, int count) {
  return GridChart(std::vector<double>(static_cast<std::size_t>(n), -half_width),
                   std::vector<double>(static_cast<std::size_t>(n), half_width),
                   std::vector<int>(static_cast<std::size_t>(n), count));
}

GridChart GridChart::with_count(int count) const {
  return GridChart(lo_, hi_, std::vector<int>(count_.size(), count));
}

double GridChart::cell_volume() const {
  double v = 1.0;
  for (double h : spacing_) v *= h;
  return v;
}

void GridChart::point(std::size_t node, std::span<double> x) const {
  for (int a = 0; a < dim(); ++a) x[a] = coord(node, a);
}

std::vector<double> GridChart::point(std::size_t node) const {
  std::vector<double> x(count_.size());
  point(node, x);
  return x;
}

int GridChart::boundary_distance(std::size_t node) const {
  int d = count_[0];
  for (int a = 0; a < dim(); ++a) {
    int i = axis_index(node, a);
    d = std::min({d, i, count_[a] - 1 - i});
  }
  return d;
}

bool GridChart::shift(std::size_t node, int axis, int steps, std::size_t& out) const {
  int i = axis_index(node, axis) + steps;
  if (i < 0 || i >= count_[axis]) return false;
  out = shifted(node, axis, steps);
  return true;
}

std::size_t Field::valid_count() const { return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1)); }

double Field::max_abs() const {
  double m = 0.0;
  for (std::size_t p = 0; p < chart.size(); ++p) {
    if (!valid[p]) continue;
    for (int c = 0; c < components; ++c) m = std::max(m, std::abs(at(p, c)));
  }
  return m;
}

}  // namespace mingraph
