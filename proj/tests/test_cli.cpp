#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mingraph/cli.hpp"
#include "mingraph/errors.hpp"
#include "mingraph/graph_io.hpp"

using namespace mingraph;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
  json report() const { return json::parse(out); }
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mingraph");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("config: unknown keys rejected, echo round trips") {
  CHECK_THROWS_AS(config_from_json({{"command", "verify"}, {"colour", "red"}}), InvalidInput);
  CHECK_THROWS_AS(config_from_json({{"res", "many"}}), InvalidInput);
  CHECK_THROWS_AS(config_from_json({{"params", 3}}), InvalidInput);
  RunConfig c;
  c.command = "probe";
  c.example = "lawson_osserman";
  c.params = {{"inner_radius", 0.02}};
  c.radii = {0.5, 1.0, 2.0};
  c.p = 2.5;
  c.seed = 42;
  c.threads = 3;
  const json echo = config_to_json(c);
  CHECK_FALSE(echo.contains("threads"));
  CHECK(config_to_json(config_from_json(echo)) == echo);
}

TEST_CASE("analyze summaries") {
  Run lin = run({"analyze", "--example", "linear"});
  REQUIRE(lin.code == 0);
  json f = lin.report()["fields"];
  for (const char* key : {"A_norm2", "flatness_defect", "H_norm", "mss_residual"}) CHECK(f[key]["max"].get<double>() == 0.0);
  CHECK(f["star_omega"]["nodes"].get<int>() > 0);

  json sp = run({"analyze", "--example", "scherk_product", "--res", "9"}).report();
  CHECK(sp["fields"]["flatness_defect"]["max"].get<double>() <= 1e-10);
  json par = run({"analyze", "--example", "paraboloid_control", "--res", "33"}).report();
  CHECK(par["fields"]["mss_residual"]["max"].get<double>() > 1e-2);
}

TEST_CASE("reports embed version, config, seed and chart") {
  json r = run({"analyze", "--example", "scherk", "--res", "17", "--box", "-0.5,0.5", "--seed", "7"}).report();
  CHECK(r["tool"] == "mingraph");
  CHECK(r["version"] == kToolVersion);
  CHECK(r["seed"] == 7);
  CHECK(r["config"]["seed"] == 7);
  CHECK(r["config"]["res"] == json::array({17}));
  CHECK(r["chart"]["count"] == json::array({17, 17}));
  CHECK(r["chart"]["lo"] == json::array({-0.5, -0.5}));
  CHECK(r["map"]["name"] == "scherk");
  CHECK(r["mode"] == "analytic");
}

TEST_CASE("verify gates on flatness and minimality") {
  Run lin = run({"verify", "--example", "linear", "--res", "9"});
  CHECK(lin.code == 0);
  for (const auto& c : lin.report()["checks"]) CHECK(c["status"] == "pass");

  Run lo = run({"verify", "--example", "lawson_osserman", "--res", "9"});
  CHECK(lo.code == 0);
  for (const auto& c : lo.report()["checks"]) {
    const std::string id = c["identity"];
    if (id == "kato") {
      CHECK(c["status"] == "skipped");
      CHECK(c["note"].get<std::string>().find("flat normal bundle") != std::string::npos);
    }
    if (id.rfind("delta_star_omega", 0) == 0 || id == "simons") CHECK(c["status"] == "pass");
  }

  Run par = run({"verify", "--example", "paraboloid_control", "--res", "33"});
  CHECK(par.code == kCheckFailed);
  CHECK(par.report()["summary"]["failed"].get<int>() > 0);
}

TEST_CASE("exit codes") {
  CHECK(run({"--help"}).code == kPass);
  CHECK(run({"analyze", "--bogus"}).code == kInvalid);
  CHECK(run({}).code == kInvalid);
  CHECK(run({"analyze", "--example", "nonsense"}).code == kInvalid);
  CHECK(run({"analyze", "--example", "scherk", "--params", "{bad"}).code == kInvalid);
  CHECK(run({"analyze", "--example", "scherk", "--params", "{\"a\": 1}"}).code == kInvalid);
  CHECK(run({"analyze", "--example", "scherk", "--box", "0,1,2"}).code == kInvalid);
  CHECK(run({"analyze"}).code == kInvalid);
  CHECK(run({"probe", "--example", "lawson_osserman", "--radii", "0.6,0.8,1.0"}).code == kInvalid);
  CHECK(run({"probe", "--example", "linear", "--radii", "1,2,3", "--p", "5"}).code == kInvalid);
  CHECK(run({"stability", "--example", "scherk", "--res", "17", "--frame", "sideways"}).code == kInvalid);
  CHECK(run({"analyze", "--example", "scherk", "--res", "1"}).code == kInvalid);
  Run capped = run({"solve", "--example", "scherk", "--res", "17", "--max-iters", "1"});
  CHECK(capped.code == kNoConvergence);
  CHECK_FALSE(capped.report()["converged"].get<bool>());
}

TEST_CASE("config file with flag overrides") {
  TempDir dir("mingraph_test_cli_config");
  const std::string cfg = dir.file("run.json");
  write_json_file(cfg, {{"command", "analyze"}, {"example", "scherk"}, {"res", {9}}, {"seed", 5}});
  json r = run({"analyze", "--config", cfg, "--seed", "6"}).report();
  CHECK(r["seed"] == 6);
  CHECK(r["chart"]["count"] == json::array({9, 9}));
  CHECK(run({"verify", "--config", cfg}).code == kInvalid);
  write_json_file(cfg, {{"example", "scherk"}, {"resolution", 9}});
  CHECK(run({"analyze", "--config", cfg}).code == kInvalid);
}

TEST_CASE("solve writes a graph file that verify reads back") {
  TempDir dir("mingraph_test_cli_solve");
  Run s = run({"solve", "--example", "scherk", "--res", "33", "--out", dir.file("sol.json")});
  REQUIRE(s.code == 0);
  json report = read_json_file(dir.file("sol.json"));
  CHECK(report["converged"].get<bool>());
  CHECK(report["max_error_vs_example"].get<double>() < 1e-3);
  json graph = read_json_file(dir.file("sol.graph.json"));
  CHECK(graph["format"] == "mingraph-graph");
  CHECK(graph["df"].size() == 33u * 33u * 2u);
  CHECK(graph["metadata"]["seed"] == 1);

  Run v = run({"verify", "--input", dir.file("sol.graph.json"), "--tol", "0.04", "--inner-fraction", "0.2"});
  CHECK(v.code == 0);
  json vr = v.report();
  CHECK(vr["mode"] == "sampled");
  CHECK(vr["map"]["name"] == "graph_file");
  CHECK(run({"verify", "--input", dir.file("sol.graph.json"), "--res", "9"}).code == kInvalid);
  CHECK(run({"verify", "--input", dir.file("sol.graph.json"), "--mode", "analytic"}).code == kInvalid);
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
  TempDir dir("mingraph_test_cli_determinism");
  const std::vector<std::vector<std::string>> commands = {
      {"probe", "--example", "lawson_osserman", "--params", "{\"inner_radius\": 0.02, \"outer_radius\": 3.0}",
       "--radii", "0.6,0.8,1.0", "--shell", "0.25", "--res", "9"},
      {"stability", "--example", "scherk_product", "--res", "9", "--scalar-pairs", "5", "--vector-pairs", "3", "--seed", "11"},
      {"verify", "--example", "scherk_product", "--res", "9"},
      {"solve", "--example", "scherk", "--res", "17"}};
  for (const auto& base : commands) {
    std::vector<std::string> texts;
    for (const char* threads : {"1", "3", "1"}) {
      auto args = base;
      args.insert(args.end(), {"--threads", threads, "--out", dir.file("r.json")});
      REQUIRE(run(args).code == 0);
      std::string all = slurp(dir.path / "r.json");
      for (const char* side : {"r.csv", "r.graph.json"})
        if (std::filesystem::exists(dir.path / side)) all += slurp(dir.path / side);
      texts.push_back(all);
    }
    CAPTURE(base[0]);
    CHECK(texts[0] == texts[1]);
    CHECK(texts[0] == texts[2]);
  }
}

TEST_CASE("probe CSV layout") {
  TempDir dir("mingraph_test_cli_probe");
  Run p = run({"probe", "--example", "linear", "--params", "{\"n\": 2, \"m\": 1, \"matrix\": [1, 0]}", "--radii",
               "0.5,1,2", "--res", "9", "--out", dir.file("p.json")});
  REQUIRE(p.code == 0);
  std::istringstream csv(slurp(dir.path / "p.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "R,vol,intA2p,supA2,coverage");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3);
  json r = read_json_file(dir.file("p.json"));
  CHECK(r["fitted_slopes"]["vol"]["slope"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r["dimension_admissible"].get<bool>());
}
