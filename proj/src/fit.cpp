#include "mingraph/fit.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mingraph/errors.hpp"

namespace mingraph {

namespace {

double t975(int dof) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086};
  if (dof < 1) return std::numeric_limits<double>::infinity();
  if (dof <= 20) return table[dof - 1];
  return 1.96 + 2.4 / dof;
}

}  // namespace

LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit_loglog: need at least two (x, y) pairs");
  const int k = static_cast<int>(x.size());
  std::vector<double> lx(k), ly(k);
  for (int i = 0; i < k; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidInput("fit_loglog: data must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < k; ++i) {
    mx += lx[i] / k;
    my += ly[i] / k;
  }
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidInput("fit_loglog: abscissae must not all coincide");
  LineFit fit;
  fit.points = k;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (k > 2) {
    double ss = 0.0;
    for (int i = 0; i < k; ++i) {
      double r = ly[i] - fit.intercept - fit.slope * lx[i];
      ss += r * r;
    }
    fit.half_width = t975(k - 2) * std::sqrt(ss / (k - 2) / sxx);
  } else {
    fit.half_width = std::numeric_limits<double>::infinity();
  }
  return fit;
}

double convergence_order(std::span<const double> h, std::span<const double> err) { return fit_loglog(h, err).slope; }

}  // namespace mingraph
