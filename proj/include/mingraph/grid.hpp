#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mingraph {

inline constexpr int kMinNodesPerAxis = 5;

/// Uniform tensor-product grid on a box in R^n. Nodes are numbered row-major
/// with axis 0 slowest: index = sum_k i_k * stride_k.
class GridChart {
 public:
  GridChart() = default;
  GridChart(std::vector<double> lo, std::vector<double> hi, std::vector<int> count);

  /// [-half_width, half_width]^n with `count` nodes per axis.
  static GridChart cube(int n, double half_width, int count);

  int dim() const { return static_cast<int>(count_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<int>& count() const { return count_; }
  double spacing(int axis) const { return spacing_[axis]; }
  std::size_t stride(int axis) const { return stride_[axis]; }
  double cell_volume() const;

  int axis_index(std::size_t node, int axis) const {
    return static_cast<int>((node / stride_[axis]) % static_cast<std::size_t>(count_[axis]));
  }
  double coord(std::size_t node, int axis) const { return lo_[axis] + axis_index(node, axis) * spacing_[axis]; }
  void point(std::size_t node, std::span<double> x) const;
  std::vector<double> point(std::size_t node) const;

  /// Cells between a node and the nearest chart face.
  int boundary_distance(std::size_t node) const;
  bool is_boundary(std::size_t node) const { return boundary_distance(node) == 0; }

  /// Node reached by moving `steps` along `axis`, or false when it leaves the chart.
  bool shift(std::size_t node, int axis, int steps, std::size_t& out) const;
  std::size_t shifted(std::size_t node, int axis, int steps) const {
    return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node) + steps * static_cast<std::ptrdiff_t>(stride_[axis]));
  }

  /// Same box, `count` nodes per axis.
  GridChart with_count(int count) const;

  bool operator==(const GridChart& o) const { return lo_ == o.lo_ && hi_ == o.hi_ && count_ == o.count_; }

 private:
  std::vector<double> lo_, hi_, spacing_;
  std::vector<int> count_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

/// A field over a chart: `components` values per node plus a validity mask.
struct Field {
  GridChart chart;
  int components = 1;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;
  /// Optional exact partial derivative d(component)/dx^axis at a node; when
  /// set, differentiate() returns it instead of a difference quotient.
  std::function<double(std::size_t node, int component, int axis)> exact_derivative;

  Field() = default;
  Field(GridChart c, int comps, double fill = 0.0)
      : chart(std::move(c)), components(comps), values(chart.size() * static_cast<std::size_t>(comps), fill),
        valid(chart.size(), 1) {}

  double& at(std::size_t node, int c = 0) { return values[node * static_cast<std::size_t>(components) + static_cast<std::size_t>(c)]; }
  double at(std::size_t node, int c = 0) const { return values[node * static_cast<std::size_t>(components) + static_cast<std::size_t>(c)]; }
  std::span<const double> node_values(std::size_t node) const {
    return {values.data() + node * static_cast<std::size_t>(components), static_cast<std::size_t>(components)};
  }
  std::span<double> node_values(std::size_t node) {
    return {values.data() + node * static_cast<std::size_t>(components), static_cast<std::size_t>(components)};
  }
  bool is_valid(std::size_t node) const { return valid[node] != 0; }
  std::size_t valid_count() const;
  /// Max |value| over valid nodes and all components.
  double max_abs() const;
};

}  // namespace mingraph
