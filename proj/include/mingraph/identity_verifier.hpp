#pragma once

// Pointwise identities and inequalities for minimal graphs, evaluated on a
// GeometryField:
//   delta_star_omega_full     Delta *Omega + *Omega |A|^2 - 2 sum_k sum_{a,b,i<j} Omega_abij h_aik h_bjk = 0
//   delta_star_omega_antisym  Delta *Omega + *Omega |A|^2 - 2 sum_{a<b,i<j} Omega_abij R_abij = 0
//   simons                    Delta |A|^2 = 2|nabla A|^2 - 2 sum_{a,b} <A_a, A_b>^2 - 2 sum |R_abij|^2
//   kato                      |nabla A|^2 - |nabla |A||^2 >= (2/n) |nabla |A||^2          (flat)
//   log_star_omega            Delta log *Omega = -|A|^2 - |nabla log *Omega|^2            (flat)
//   subharmonic               Delta(|A|^p *Omega^-q) >= (q - p) |A|^(p+2) *Omega^-q       (flat)
//   drift                     Delta(|A|^(p-1) v^p) >= |A|^(p+1) v^p,  v = 1 / *Omega       (flat)
// Omega_abij is Omega(e_1, .., e_n) with nu_a in place i and nu_b in place j,
// and R_abij = sum_k (h_aik h_bjk - h_bik h_ajk).
//
// A report whose input is not minimal enough (max |mss residual| above 1e-6
// analytic, 10 h^2 sampled) is marked invalid rather than failed. Checks
// restricted to flat normal bundles raise PreconditionError on other input.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mingraph/discrete_calculus.hpp"
#include "mingraph/fit.hpp"

namespace mingraph {

struct IdentityReport {
  std::string identity_id;
  /// Identities: the residual. Inequalities: the violation max(0, -margin - slack).
  Field residual;
  /// Inequalities only: lhs - rhs per node.
  Field margin;
  double max_abs = 0.0;
  double l2_norm = 0.0;
  std::size_t nodes_evaluated = 0;
  std::optional<double> convergence_order;
  double tolerance = 0.0;
  bool pass = false;
  /// False when the input failed the minimality gate; pass is then false too.
  bool valid = true;
  std::string note;
  /// Named side quantities (min_margin, flat_part_max, r_term_max, ...).
  std::map<std::string, double> extras;
};

struct VerifyOptions {
  /// Identity tolerance; 0 picks 1e-6 (analytic) or sampled_factor * h^2.
  double tolerance = 0.0;
  double sampled_factor = 100.0;
  /// Absolute slack for the curvature-power inequalities.
  double inequality_tolerance = 1e-6;
  /// Relative slack, scaled by the local magnitude of the terms.
  double relative_slack = 1e-8;
  /// Nodes with |A| (or |nabla |A||) below this are skipped as 0/0.
  double a_floor = 1e-6;
  /// Max flatness defect for the flat-only checks.
  double flat_tolerance = 1e-8;
  double minimal_tolerance = 1e-6;
  double minimal_factor_sampled = 10.0;
  /// Exponents for verify_all.
  double p = 3.0;
};

IdentityReport check_delta_star_omega_full(const GeometryField& geo, const VerifyOptions& opts = {});
/// extras: flat_part_max (|Delta *Omega + *Omega |A|^2|), r_term_max.
IdentityReport check_delta_star_omega_antisym(const GeometryField& geo, const VerifyOptions& opts = {});
/// Needs an analytic map (sampled mode on it is allowed for refinement studies).
IdentityReport check_simons(const GeometryField& geo, const VerifyOptions& opts = {});
IdentityReport check_kato(const GeometryField& geo, const VerifyOptions& opts = {});
IdentityReport check_log_star_omega(const GeometryField& geo, const VerifyOptions& opts = {});
/// q defaults to p: then p >= max(2, (n-1)/2). Otherwise p >= 2 and q (1 - 2/n) <= p - 1 + 2/n.
IdentityReport check_subharmonic_pp(const GeometryField& geo, double p, std::optional<double> q = std::nullopt,
                                    const VerifyOptions& opts = {});
/// p >= max(3, n-1).
IdentityReport check_drift_inequality(const GeometryField& geo, double p, const VerifyOptions& opts = {});

/// Every check. Those whose preconditions fail come back with pass = false,
/// valid = false and the reason in note.
std::vector<IdentityReport> verify_all(const GeometryField& geo, const VerifyOptions& opts = {});

/// Maximal flatness defect over interior nodes.
double max_flatness_defect(const GeometryField& geo);
/// Max |mss residual| over interior nodes, and the gate it is compared to.
std::pair<double, double> minimality(const GeometryField& geo, const VerifyOptions& opts = {});

/// Max |residual| over valid nodes inside the chart box shrunk by
/// inner_fraction of its width on each side.
double inner_max_abs(const Field& residual, double inner_fraction);

using IdentityCheck = std::function<IdentityReport(const GeometryField&)>;

struct RefinementStudy {
  std::vector<double> h;
  std::vector<double> max_abs;
  LineFit fit;
};

/// Runs `check` on each chart and fits max |residual| ~ h^order. The maximum
/// is taken over the nodes inside the first chart's box shrunk by
/// `inner_fraction` of its width on each side (a fixed physical region).
RefinementStudy refinement_study(const IdentityCheck& check, const GraphMapPtr& map, const std::vector<GridChart>& charts,
                                 const GeometryOptions& options, double inner_fraction = 0.0);

struct GrowthSeries {
  std::vector<double> radii;
  std::vector<double> ratio;
  /// "decreasing", "increasing" or "mixed".
  std::string trend;
};

/// max over |x| = R of sqrt(det(I + df^T df)) / sqrt(|x|^2 + |f|^2) for each
/// radius, sampled on a deterministic point set of the sphere. Raises
/// CoverageError when a sample leaves the map's domain.
GrowthSeries eh_growth_ratio(const GraphMap& map, const std::vector<double>& radii, int samples_per_axis = 24);

}  // namespace mingraph
