#include "mingraph/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include "mingraph/detail/stencils.hpp"
#include "mingraph/discrete_calculus.hpp"
#include "mingraph/errors.hpp"
#include "mingraph/example_catalog.hpp"
#include "mingraph/graph_io.hpp"
#include "mingraph/identity_verifier.hpp"
#include "mingraph/mss_solver.hpp"
#include "mingraph/parallel.hpp"
#include "mingraph/scaling_probe.hpp"
#include "mingraph/stability_lab.hpp"

namespace mingraph {

using nlohmann::json;

namespace {

const std::vector<std::string> kCommands = {"analyze", "verify", "stability", "probe", "solve"};

template <class T>
T get_key(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidInput("config key '" + key + "': " + e.what());
  }
}

struct Source {
  GraphMapPtr map;
  GridChart chart;
  std::string name;
  json parameters = json::object();
  bool from_file = false;
};

std::pair<std::vector<double>, std::vector<double>> parse_box(const std::vector<double>& box, int n, const char* what) {
  std::vector<double> lo(n), hi(n);
  if (box.size() == 2) {
    std::fill(lo.begin(), lo.end(), box[0]);
    std::fill(hi.begin(), hi.end(), box[1]);
  } else if (box.size() == static_cast<std::size_t>(2 * n)) {
    for (int a = 0; a < n; ++a) {
      lo[a] = box[2 * a];
      hi[a] = box[2 * a + 1];
    }
  } else {
    throw InvalidInput(std::string(what) + " needs 2 or " + std::to_string(2 * n) + " numbers");
  }
  return {lo, hi};
}

GridChart override_chart(const GridChart& base, const RunConfig& c) {
  const int n = base.dim();
  std::vector<double> lo = base.lo(), hi = base.hi();
  std::vector<int> count = base.count();
  if (!c.box.empty()) std::tie(lo, hi) = parse_box(c.box, n, "--box");
  if (c.res.size() == 1) {
    std::fill(count.begin(), count.end(), c.res[0]);
  } else if (c.res.size() == static_cast<std::size_t>(n)) {
    count = c.res;
  } else if (!c.res.empty()) {
    throw InvalidInput("--res needs 1 or " + std::to_string(n) + " counts");
  }
  return GridChart(lo, hi, count);
}

Source resolve_source(const RunConfig& c) {
  if (c.example.empty() == c.input.empty()) throw InvalidInput("give exactly one of --example and --input");
  Source s;
  if (!c.input.empty()) {
    if (!c.box.empty() || !c.res.empty()) throw InvalidInput("--box and --res do not apply to --input: the chart comes from the graph file");
    auto g = graph_from_json(read_json_file(c.input));
    s.chart = g->chart();
    s.map = g;
    s.name = "graph_file";
    s.from_file = true;
    return s;
  }
  s.map = make_example(c.example, c.params);
  s.name = c.example;
  s.parameters = s.map->parameters();
  s.chart = override_chart(default_chart(c.example, c.params), c);
  if (s.chart.dim() != s.map->domain_dim()) throw InvalidInput("chart dimension does not match the example");
  return s;
}

Mode resolve_mode(const RunConfig& c, const Source& s) {
  if (c.mode == "auto") return s.map->analytic() ? Mode::analytic : Mode::sampled;
  Mode m = parse_mode(c.mode);
  if (m == Mode::analytic && !s.map->analytic())
    throw PreconditionError("analytic mode needs a closed-form example; graph files are sampled");
  return m;
}

json map_json(const Source& s) {
  json j = {{"name", s.name}, {"n", s.map->domain_dim()}, {"m", s.map->codim()}, {"parameters", s.parameters}};
  if (!s.from_file) j["singular_set"] = singular_set(s.name);
  return j;
}

json header(const RunConfig& c, const Source& s) {
  return {{"tool", "mingraph"},  {"version", kToolVersion},         {"command", c.command}, {"seed", c.seed},
          {"config", config_to_json(c)}, {"chart", chart_to_json(s.chart)}, {"map", map_json(s)}};
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Summary {
  std::vector<double> values;
  json to_json() const {
    if (values.empty()) return {{"nodes", 0}, {"min", nullptr}, {"max", nullptr}, {"mean", nullptr}};
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    return {{"nodes", values.size()},
            {"min", *mn},
            {"max", *mx},
            {"mean", pairwise_sum(values) / static_cast<double>(values.size())}};
  }
};

CommandOutput cmd_analyze(const RunConfig& c) {
  Source s = resolve_source(c);
  GeometryOptions o;
  o.mode = resolve_mode(c, s);
  o.derivatives = false;
  GeometryField geo(s.map, s.chart, o);
  Summary star, a2, flat, hnorm, mss;
  for (std::size_t p = 0; p < s.chart.size(); ++p) {
    if (!geo.valid(p)) continue;
    const PointGeometry& G = geo.at(p);
    star.values.push_back(G.star_omega);
    a2.values.push_back(G.A_norm2);
    flat.values.push_back(flatness_defect(G.R_perp));
    hnorm.values.push_back(G.mean_curvature_norm());
    const Field& r = geo.mss_residual();
    if (r.valid[p]) {
      double v = 0.0;
      for (int b = 0; b < r.components; ++b) v = std::max(v, std::abs(r.at(p, b)));
      mss.values.push_back(v);
    }
  }
  CommandOutput out;
  out.report = header(c, s);
  out.report["mode"] = mode_name(o.mode);
  out.report["valid_nodes"] = geo.chart().size() - std::count(geo.valid_mask().begin(), geo.valid_mask().end(), 0);
  out.report["fields"] = {{"star_omega", star.to_json()},
                          {"A_norm2", a2.to_json()},
                          {"flatness_defect", flat.to_json()},
                          {"H_norm", hnorm.to_json()},
                          {"mss_residual", mss.to_json()}};
  return out;
}

CommandOutput cmd_verify(const RunConfig& c) {
  Source s = resolve_source(c);
  GeometryOptions o;
  o.mode = resolve_mode(c, s);
  GeometryField geo(s.map, s.chart, o);
  VerifyOptions v;
  if (c.tol) v.tolerance = *c.tol;
  if (c.p) v.p = *c.p;
  if (!(c.inner_fraction >= 0.0 && c.inner_fraction < 0.5)) throw InvalidInput("--inner-fraction must lie in [0, 0.5)");
  json checks = json::array();
  int passed = 0, failed = 0, skipped = 0;
  for (const IdentityReport& r : verify_all(geo, v)) {
    bool pass = r.pass;
    json j = {{"identity", r.identity_id},
              {"valid", r.valid},
              {"max_abs", finite_or_null(r.max_abs)},
              {"l2_norm", finite_or_null(r.l2_norm)},
              {"nodes_evaluated", r.nodes_evaluated},
              {"tolerance", r.tolerance},
              {"note", r.note},
              {"extras", r.extras}};
    if (c.inner_fraction > 0.0 && r.valid) {
      const double inner = inner_max_abs(r.residual, c.inner_fraction);
      j["inner_max_abs"] = inner;
      pass = inner <= r.tolerance;
    }
    if (r.convergence_order) j["convergence_order"] = *r.convergence_order;
    std::string status = pass ? "pass" : "fail";
    if (!r.valid && r.note.rfind("skipped", 0) == 0) status = "skipped";
    j["status"] = status;
    j["pass"] = pass;
    (status == "pass" ? passed : status == "skipped" ? skipped : failed)++;
    checks.push_back(j);
  }
  auto [mss_max, gate] = minimality(geo, v);
  CommandOutput out;
  out.report = header(c, s);
  out.report["mode"] = mode_name(o.mode);
  out.report["checks"] = checks;
  out.report["minimality"] = {{"max_abs", finite_or_null(mss_max)}, {"gate", gate}};
  out.report["flatness_defect_max"] = finite_or_null(max_flatness_defect(geo));
  out.report["summary"] = {{"passed", passed}, {"failed", failed}, {"skipped", skipped}};
  out.exit_code = failed ? kCheckFailed : kPass;
  return out;
}

json pairs_json(const std::vector<std::pair<double, double>>& pairs, int& violations) {
  json a = json::array();
  for (auto [lhs, rhs] : pairs) {
    const bool ok = lhs <= rhs;
    violations += !ok;
    a.push_back({{"lhs", lhs}, {"rhs", rhs}, {"ok", ok}});
  }
  return a;
}

CommandOutput cmd_stability(const RunConfig& c) {
  Source s = resolve_source(c);
  GeometryOptions o;
  o.mode = resolve_mode(c, s);
  o.derivatives = c.vector_pairs > 0;
  GeometryField geo(s.map, s.chart, o);
  std::optional<Box> box;
  if (!c.subdomain.empty()) {
    auto [lo, hi] = parse_box(c.subdomain, s.chart.dim(), "--subdomain");
    box = Box{lo, hi};
  }
  StabilityReport lam = jacobi_lambda_min(geo, box);
  StabilityReport probes = stability_probes(geo, c.scalar_pairs, c.vector_pairs, c.seed, parse_frame_mode(c.frame));
  const double tol = c.tol.value_or(1e-3);
  int bad_scalar = 0, bad_vector = 0;
  CommandOutput out;
  out.report = header(c, s);
  out.report["mode"] = mode_name(o.mode);
  out.report["lambda_min"] = lam.lambda_min;
  out.report["lambda_tolerance"] = tol;
  out.report["subdomain"] = lam.domain;
  out.report["unknowns"] = lam.unknowns;
  out.report["iterations"] = lam.iterations;
  out.report["frame"] = c.frame;
  out.report["quadratic_form_pairs"] = pairs_json(probes.quadratic_form_pairs, bad_scalar);
  out.report["second_variation_pairs"] = pairs_json(probes.second_variation_pairs, bad_vector);
  out.report["violations"] = {{"quadratic_form", bad_scalar}, {"second_variation", bad_vector}};
  const bool pass = lam.lambda_min >= -tol && bad_scalar == 0 && bad_vector == 0;
  out.report["pass"] = pass;
  out.exit_code = pass ? kPass : kCheckFailed;
  return out;
}

CommandOutput cmd_probe(const RunConfig& c) {
  if (c.example.empty() == c.input.empty()) throw InvalidInput("give exactly one of --example and --input");
  if (!c.box.empty()) throw InvalidInput("probe builds one chart [-R, R]^n per radius; use --res for its node count");
  if (c.res.size() > 1) throw InvalidInput("probe takes a single --res count");
  Source s;
  ProbeOptions po;
  po.shell_fraction = c.shell;
  if (!c.res.empty()) po.nodes_per_axis = c.res[0];
  if (!c.input.empty()) {
    auto g = graph_from_json(read_json_file(c.input));
    s.map = g;
    s.chart = g->chart();
    s.name = "graph_file";
    s.from_file = true;
  } else {
    s.map = make_example(c.example, c.params);
    s.name = c.example;
    s.parameters = s.map->parameters();
  }
  po.mode = resolve_mode(c, s);
  const double p = c.p.value_or(2.0);
  ScalingProbeResult r = run_probe(s.map, p, c.radii, po);
  std::vector<double> cutoff;
  for (double R : c.radii) cutoff.push_back(cutoff_inequality_ratio(s.map, p, R, po));
  CommandOutput out;
  out.report = header(c, s);
  if (!s.from_file) out.report["chart"] = {{"per_radius", "[-R, R]^n"}, {"count", r.nodes_per_axis}};
  out.report["mode"] = mode_name(po.mode);
  out.report["p"] = p;
  out.report["shell_fraction"] = r.shell_fraction;
  out.report["series"] = {{"R", r.radii},     {"vol", r.vol},
                          {"intA2p", r.intA2p}, {"supA2", r.supA2},
                          {"supA2_richardson", r.supA2_richardson}, {"coverage", r.coverage},
                          {"cutoff_ratio", cutoff}};
  json slopes = json::object();
  for (const auto& [key, f] : r.fitted_slopes)
    slopes[key] = {{"slope", f.slope}, {"half_width", finite_or_null(f.half_width)}, {"points", f.points}};
  out.report["fitted_slopes"] = slopes;
  out.report["vol_increasing"] = r.vol_increasing;
  out.report["dimension_admissible"] = dimension_admissible(s.map->domain_dim());
  std::ostringstream csv;
  write_probe_csv(r, csv);
  out.csv = csv.str();
  return out;
}

CommandOutput cmd_solve(const RunConfig& c) {
  Source s = resolve_source(c);
  InitialGuess guess = c.initial == "harmonic" ? InitialGuess::harmonic
                       : c.initial == "zero"   ? InitialGuess::zero
                       : c.initial == "given"  ? InitialGuess::given
                                               : throw InvalidInput("--initial must be harmonic, zero or given");
  DirichletProblem pb = problem_from_map(*s.map, s.chart, guess);
  if (c.tol) pb.newton.residual_tol = *c.tol;
  pb.newton.max_iters = c.max_iters;
  SolveResult r = solve(pb);
  CommandOutput out;
  out.report = header(c, s);
  json trace = {{"residual_max", r.residual_max}, {"residual_norm", r.residual_norm}, {"step_lengths", r.step_lengths}};
  out.report["converged"] = r.converged;
  out.report["iterations"] = r.iterations;
  out.report["message"] = r.message;
  out.report["residual_tol"] = pb.newton.residual_tol;
  out.report["trace"] = trace;
  if (!s.from_file) {
    Field exact = sample_values(*s.map, s.chart);
    double err = 0.0;
    for (std::size_t i = 0; i < exact.values.size(); ++i)
      if (std::isfinite(exact.values[i])) err = std::max(err, std::abs(exact.values[i] - r.graph->values()[i]));
    out.report["max_error_vs_example"] = err;
  }
  std::vector<double> df;
  std::vector<std::uint8_t> ok;
  detail::grid_gradient(s.chart, pb.m, r.graph->values(), std::vector<std::uint8_t>(s.chart.size(), 1), 2, df, ok);
  json meta = {{"tool", "mingraph"}, {"version", kToolVersion}, {"seed", c.seed}, {"config", config_to_json(c)},
               {"solver", {{"converged", r.converged}, {"iterations", r.iterations}, {"trace", trace}}}};
  out.graph = graph_to_json(*r.graph, &df, meta);
  out.exit_code = r.converged ? kPass : kNoConvergence;
  return out;
}

std::string stem_of(const std::string& path) {
  const std::string ext = ".json";
  if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0)
    return path.substr(0, path.size() - ext.size());
  return path;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot open '" + path + "' for writing");
  f << text;
}

}  // namespace

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("config: top level must be an object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "command") c.command = get_key<std::string>(j, key);
    else if (key == "example") c.example = get_key<std::string>(j, key);
    else if (key == "params") c.params = value;
    else if (key == "input") c.input = get_key<std::string>(j, key);
    else if (key == "box") c.box = get_key<std::vector<double>>(j, key);
    else if (key == "res") c.res = get_key<std::vector<int>>(j, key);
    else if (key == "mode") c.mode = get_key<std::string>(j, key);
    else if (key == "p") c.p = value.is_null() ? std::nullopt : std::optional(get_key<double>(j, key));
    else if (key == "radii") c.radii = get_key<std::vector<double>>(j, key);
    else if (key == "tol") c.tol = value.is_null() ? std::nullopt : std::optional(get_key<double>(j, key));
    else if (key == "out") c.out = get_key<std::string>(j, key);
    else if (key == "seed") c.seed = get_key<std::uint64_t>(j, key);
    else if (key == "threads") c.threads = get_key<int>(j, key);
    else if (key == "subdomain") c.subdomain = get_key<std::vector<double>>(j, key);
    else if (key == "scalar_pairs") c.scalar_pairs = get_key<int>(j, key);
    else if (key == "vector_pairs") c.vector_pairs = get_key<int>(j, key);
    else if (key == "frame") c.frame = get_key<std::string>(j, key);
    else if (key == "shell") c.shell = get_key<double>(j, key);
    else if (key == "inner_fraction") c.inner_fraction = get_key<double>(j, key);
    else if (key == "max_iters") c.max_iters = get_key<int>(j, key);
    else if (key == "initial") c.initial = get_key<std::string>(j, key);
    else throw InvalidInput("config: unknown key '" + key + "'");
  }
  if (!c.params.is_object()) throw InvalidInput("config: params must be an object");
  return c;
}

json config_to_json(const RunConfig& c) {
  json j = {{"command", c.command},
            {"example", c.example},
            {"params", c.params},
            {"input", c.input},
            {"box", c.box},
            {"res", c.res},
            {"mode", c.mode},
            {"radii", c.radii},
            {"out", c.out},
            {"seed", c.seed},
            {"subdomain", c.subdomain},
            {"scalar_pairs", c.scalar_pairs},
            {"vector_pairs", c.vector_pairs},
            {"frame", c.frame},
            {"shell", c.shell},
            {"inner_fraction", c.inner_fraction},
            {"max_iters", c.max_iters},
            {"initial", c.initial}};
  j["p"] = c.p ? json(*c.p) : json(nullptr);
  j["tol"] = c.tol ? json(*c.tol) : json(nullptr);
  return j;
}

CommandOutput run_command(const RunConfig& c) {
  if (c.scalar_pairs < 0 || c.vector_pairs < 0) throw InvalidInput("pair counts must be non-negative");
  if (c.command == "analyze") return cmd_analyze(c);
  if (c.command == "verify") return cmd_verify(c);
  if (c.command == "stability") return cmd_stability(c);
  if (c.command == "probe") return cmd_probe(c);
  if (c.command == "solve") return cmd_solve(c);
  throw InvalidInput("unknown command '" + c.command + "'");
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical lab for minimal graphs f: R^n -> R^m", "mingraph"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  std::string config_path, params_text;
  RunConfig flags;
  std::string mode;
  double p = 0.0, tol = 0.0;
  int threads = 0;
  auto* o_config = app.add_option("--config", config_path, "JSON file with the same keys as the flags");
  auto* o_example = app.add_option("--example", flags.example, "catalog example name");
  auto* o_params = app.add_option("--params", params_text, "example parameters as a JSON object");
  auto* o_input = app.add_option("--input", flags.input, "graph file (JSON)");
  auto* o_box = app.add_option("--box", flags.box, "lo,hi or lo1,hi1,...,lon,hin")->delimiter(',');
  auto* o_res = app.add_option("--res", flags.res, "nodes per axis (one or n values)")->delimiter(',');
  auto* o_mode = app.add_option("--mode", mode, "auto, analytic or sampled");
  auto* o_p = app.add_option("--p", p, "exponent p");
  auto* o_radii = app.add_option("--radii", flags.radii, "probe radii, comma separated")->delimiter(',');
  auto* o_tol = app.add_option("--tol", tol, "tolerance override");
  auto* o_out = app.add_option("--out", flags.out, "report path");
  auto* o_seed = app.add_option("--seed", flags.seed, "random seed");
  auto* o_threads = app.add_option("--threads", threads, "worker threads (default MINIGRAPH_THREADS, else all cores)");
  auto* o_sub = app.add_option("--subdomain", flags.subdomain, "stability: Dirichlet box")->delimiter(',');
  auto* o_sp = app.add_option("--scalar-pairs", flags.scalar_pairs, "stability: random scalar pairs");
  auto* o_vp = app.add_option("--vector-pairs", flags.vector_pairs, "stability: random second-variation pairs");
  auto* o_frame = app.add_option("--frame", flags.frame, "stability: general or parallel_frame");
  auto* o_shell = app.add_option("--shell", flags.shell, "probe: annulus fraction rho");
  auto* o_inner = app.add_option("--inner-fraction", flags.inner_fraction, "verify: judge on the shrunk box");
  auto* o_iters = app.add_option("--max-iters", flags.max_iters, "solve: Newton iteration cap");
  auto* o_init = app.add_option("--initial", flags.initial, "solve: harmonic, zero or given");
  for (const std::string& name : kCommands) app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kInvalid;
  }

  try {
    RunConfig c;
    if (o_config->count()) c = config_from_json(read_json_file(config_path));
    const std::string command = app.get_subcommands().front()->get_name();
    if (!c.command.empty() && c.command != command)
      throw InvalidInput("config command '" + c.command + "' differs from '" + command + "'");
    c.command = command;
    if (o_example->count()) c.example = flags.example;
    if (o_params->count()) {
      try {
        c.params = json::parse(params_text);
      } catch (const json::parse_error& e) {
        throw InvalidInput(std::string("--params is not valid JSON: ") + e.what());
      }
      if (!c.params.is_object()) throw InvalidInput("--params must be a JSON object");
    }
    if (o_input->count()) c.input = flags.input;
    if (o_box->count()) c.box = flags.box;
    if (o_res->count()) c.res = flags.res;
    if (o_mode->count()) c.mode = mode;
    if (o_p->count()) c.p = p;
    if (o_radii->count()) c.radii = flags.radii;
    if (o_tol->count()) c.tol = tol;
    if (o_out->count()) c.out = flags.out;
    if (o_seed->count()) c.seed = flags.seed;
    if (o_threads->count()) c.threads = threads;
    if (o_sub->count()) c.subdomain = flags.subdomain;
    if (o_sp->count()) c.scalar_pairs = flags.scalar_pairs;
    if (o_vp->count()) c.vector_pairs = flags.vector_pairs;
    if (o_frame->count()) c.frame = flags.frame;
    if (o_shell->count()) c.shell = flags.shell;
    if (o_inner->count()) c.inner_fraction = flags.inner_fraction;
    if (o_iters->count()) c.max_iters = flags.max_iters;
    if (o_init->count()) c.initial = flags.initial;
    if (c.threads) {
      if (*c.threads < 1) throw InvalidInput("--threads must be positive");
      set_thread_count(*c.threads);
    }

    CommandOutput result = run_command(c);
    if (c.out.empty()) {
      out << dump(result.report);
    } else {
      write_json_file(c.out, result.report);
      if (!result.csv.empty()) write_text(stem_of(c.out) + ".csv", result.csv);
      if (!result.graph.is_null()) write_json_file(stem_of(c.out) + ".graph.json", result.graph);
    }
    if (result.exit_code == kCheckFailed) err << "mingraph: a check failed\n";
    if (result.exit_code == kNoConvergence) err << "mingraph: no convergence\n";
    return result.exit_code;
  } catch (const ConvergenceError& e) {
    err << "mingraph: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const Error& e) {
    err << "mingraph: " << e.what() << "\n";
    return kInvalid;
  } catch (const json::exception& e) {
    err << "mingraph: " << e.what() << "\n";
    return kInvalid;
  }
}

}  // namespace mingraph
