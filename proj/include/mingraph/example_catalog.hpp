#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mingraph/graph_map.hpp"

namespace mingraph {

/// f(x) = B x with B an m x n matrix (row-major).
GraphMapPtr make_linear(int m, int n, std::vector<double> b);

/// Scherk's surface u = log(cos x / cos y) on |x|, |y| <= half_width < pi/2.
GraphMapPtr make_scherk(double half_width = 1.2);

/// (scherk(x1, x2), scherk(x3, x4)): n = 4, m = 2, flat normal bundle.
GraphMapPtr make_scherk_product(double half_width = 1.2);

/// (x, y) -> (Re p(x+iy), Im p(x+iy)), coefficients in increasing degree.
GraphMapPtr make_holomorphic(std::vector<std::complex<double>> coefficients);

/// Lawson-Osserman cone f(x) = scale |x| eta(x/|x|) with eta the Hopf map
/// S^3 -> S^2; minimal for scale = sqrt(5)/2. Defined on the shell
/// inner_radius <= |x| <= outer_radius.
GraphMapPtr make_lawson_osserman(double inner_radius = 0.5, double outer_radius = 2.0,
                                 double scale = 0.5 * 2.23606797749978969641);

/// (x^2 + y^2, x y): a non-minimal control.
GraphMapPtr make_paraboloid_control();

/// Catalog entry by name ("linear", "scherk", "scherk_product", "holomorphic",
/// "lawson_osserman", "paraboloid_control") with an optional parameter block.
/// Unknown names or parameter keys raise InvalidInput.
GraphMapPtr make_example(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

std::vector<std::string> example_names();

/// Chart used when a configuration does not specify one.
GridChart default_chart(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

/// Human-readable description of the excluded set of an example.
std::string singular_set(const std::string& name);

}  // namespace mingraph
