#pragma once

// Command layer behind the `mingraph` executable: configuration, the five
// commands and their JSON/CSV outputs. Reports embed the tool version, the
// configuration (minus the thread count), the seed and the chart, so equal
// configurations give byte-identical files for any thread count.

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace mingraph {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode { kPass = 0, kCheckFailed = 1, kInvalid = 2, kNoConvergence = 3 };

struct RunConfig {
  std::string command;
  std::string example;
  nlohmann::json params = nlohmann::json::object();
  std::string input;
  /// lo,hi (every axis) or lo_1,hi_1,...,lo_n,hi_n.
  std::vector<double> box;
  /// One count for every axis or one per axis.
  std::vector<int> res;
  std::string mode = "auto";
  std::optional<double> p;
  std::vector<double> radii;
  std::optional<double> tol;
  std::string out;
  std::uint64_t seed = 1;
  std::optional<int> threads;
  /// stability: Dirichlet subdomain box (same layout as box).
  std::vector<double> subdomain;
  int scalar_pairs = 50;
  int vector_pairs = 20;
  std::string frame = "general";
  /// probe: annulus fraction rho.
  double shell = 0.0;
  /// verify: judge residuals on the box shrunk by this fraction per side.
  double inner_fraction = 0.0;
  /// solve
  int max_iters = 50;
  std::string initial = "harmonic";
};

/// Keys as in RunConfig; unknown keys raise InvalidInput.
RunConfig config_from_json(const nlohmann::json& j);
/// Echo embedded in reports (threads omitted).
nlohmann::json config_to_json(const RunConfig& c);

struct CommandOutput {
  nlohmann::json report;
  /// probe only: the CSV series.
  std::string csv;
  /// solve only: the solution graph file.
  nlohmann::json graph;
  int exit_code = kPass;
};

/// Runs one command. Library errors propagate as exceptions.
CommandOutput run_command(const RunConfig& config);

/// Full command line: parsing, threads, running, writing outputs and mapping
/// errors to exit codes. With --out the report goes to that file (plus
/// <stem>.csv for probe and <stem>.graph.json for solve); otherwise the
/// report is printed to `out`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mingraph
