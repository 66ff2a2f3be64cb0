#pragma once

#include <span>

namespace mingraph {

/// Least-squares line through (log x, log y): y ~ C x^slope.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// 95% confidence half-width of the slope (Student t); infinite for two points.
  double half_width = 0.0;
  int points = 0;
};

/// Throws InvalidInput for fewer than two points or non-positive data.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Observed order p in err ~ C h^p.
double convergence_order(std::span<const double> h, std::span<const double> err);

}  // namespace mingraph
