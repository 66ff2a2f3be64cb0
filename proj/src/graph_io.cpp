#include "mingraph/graph_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mingraph/errors.hpp"

namespace mingraph {

namespace {

using nlohmann::json;

json number_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

std::vector<double> read_numbers(const json& j, const char* key, std::size_t expected) {
  if (!j.contains(key) || !j.at(key).is_array()) throw InvalidInput(std::string("graph file: '") + key + "' must be an array");
  const json& a = j.at(key);
  if (a.size() != expected)
    throw InvalidInput(std::string("graph file: '") + key + "' has " + std::to_string(a.size()) + " entries, expected " +
                       std::to_string(expected));
  std::vector<double> v(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    if (a[i].is_null())
      v[i] = std::numeric_limits<double>::quiet_NaN();
    else if (a[i].is_number())
      v[i] = a[i].get<double>();
    else
      throw InvalidInput(std::string("graph file: '") + key + "' holds a non-numeric entry");
  }
  return v;
}

}  // namespace

json chart_to_json(const GridChart& c) { return {{"lo", c.lo()}, {"hi", c.hi()}, {"count", c.count()}}; }

GridChart chart_from_json(const json& j) {
  try {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (key != "lo" && key != "hi" && key != "count") throw InvalidInput("chart: unknown key '" + key + "'");
    }
    return GridChart(j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>(),
                     j.at("count").get<std::vector<int>>());
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("chart: ") + e.what());
  }
}

json graph_to_json(const SampledGraph& g, const std::vector<double>* df, const json& metadata) {
  json j = {{"format", "mingraph-graph"}, {"version", 1},           {"n", g.domain_dim()},
            {"m", g.codim()},             {"chart", chart_to_json(g.chart())}, {"values", number_array(g.values())}};
  if (df) j["df"] = number_array(*df);
  if (!metadata.empty()) j["metadata"] = metadata;
  return j;
}

std::shared_ptr<SampledGraph> graph_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("graph file: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    static const std::vector<std::string> known = {"format", "version", "n", "m", "chart", "values", "df", "metadata"};
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidInput("graph file: unknown key '" + key + "'");
  }
  if (j.value("format", std::string()) != "mingraph-graph") throw InvalidInput("graph file: format must be 'mingraph-graph'");
  if (j.value("version", 0) != 1) throw InvalidInput("graph file: unsupported version");
  if (!j.contains("chart")) throw InvalidInput("graph file: missing chart");
  GridChart chart = chart_from_json(j.at("chart"));
  int n = 0, m = 0;
  try {
    n = j.at("n").get<int>();
    m = j.at("m").get<int>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("graph file: ") + e.what());
  }
  if (n != chart.dim()) throw InvalidInput("graph file: n does not match the chart");
  if (m < 1) throw InvalidInput("graph file: m must be at least 1");
  std::vector<double> values = read_numbers(j, "values", chart.size() * m);
  if (j.contains("df")) read_numbers(j, "df", chart.size() * m * n);
  return std::make_shared<SampledGraph>(chart, m, std::move(values), "graph_file");
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  out << dump(j);
  if (!out) throw InvalidInput("failed to write '" + path + "'");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(1) + "\n"; }

}  // namespace mingraph
