#pragma once

// Radius sweeps over Sigma cut by ambient balls B_R in R^{n+m}:
//   vol(R)    = Vol(Sigma in B_R)
//   intA2p(R) = int_{Sigma in B_{R/2}} |A|^{2p}
//   supA2(R)  = max over grid nodes of Sigma in B_{R/2} of |A|^2
// Each radius gets its own chart [-R, R]^n (Sigma in B_R projects into it)
// with a fixed node count, so the resolution scales with R.

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mingraph/discrete_calculus.hpp"
#include "mingraph/fit.hpp"
#include "mingraph/graph_map.hpp"

namespace mingraph {

struct ProbeOptions {
  /// Nodes per axis of each per-radius chart; 0 picks 129 (n <= 2), 33 (n = 3), 17 (n >= 4).
  int nodes_per_axis = 0;
  /// Annulus mode: drop Sigma in B_{rho R} from every ball of radius R (rho = shell_fraction).
  double shell_fraction = 0.0;
  double min_coverage = 0.95;
  Mode mode = Mode::analytic;
};

struct ScalingProbeResult {
  std::vector<double> radii;
  std::vector<double> vol, intA2p, supA2;
  /// sup + (sup - sup_coarse) / 3, with the coarse chart at half the resolution.
  std::vector<double> supA2_richardson;
  std::vector<double> coverage;
  /// Keys vol, intA2p, supA2; a series with a non-positive entry gets no fit.
  std::map<std::string, LineFit> fitted_slopes;
  double p = 2.0;
  double shell_fraction = 0.0;
  int nodes_per_axis = 0;
  bool vol_increasing = true;
};

/// p must lie in [2, 2 + sqrt(2/n)); at least three radii, positive and
/// increasing. CoverageError when a ball is less than min_coverage inside.
ScalingProbeResult run_probe(const GraphMapPtr& map, double p, const std::vector<double>& radii,
                             const ProbeOptions& options = {});

/// int |A|^{2p} phi^{2p} / int |grad phi|^{2p} over Sigma in B_R with
/// phi = clamp(2 - 2 r / R, 0, 1), r the ambient distance to the origin.
/// Zero when |A| vanishes identically.
double cutoff_inequality_ratio(const GraphMapPtr& map, double p, double R, const ProbeOptions& options = {});

/// Dimension bound n < 4 + sqrt(8/n) of the Bernstein-type statement: true for n <= 5.
bool dimension_admissible(int n);

/// Shortest round-trip decimal, locale independent.
std::string format_double(double x);

/// Columns R,vol,intA2p,supA2,coverage; one row per radius.
void write_probe_csv(const ScalingProbeResult& result, std::ostream& out);

}  // namespace mingraph
