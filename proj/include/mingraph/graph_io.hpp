#pragma once

// JSON graph files:
//   {"format": "mingraph-graph", "version": 1, "n": 2, "m": 1,
//    "chart": {"lo": [...], "hi": [...], "count": [...]},
//    "values": [...],            node-major, m per node, last axis fastest
//    "df": [...],                optional, node-major m*n per node
//    "metadata": {...}}          optional, free form
// Non-finite entries are written as null and read back as NaN (outside the
// graph's domain).

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "mingraph/graph_map.hpp"

namespace mingraph {

nlohmann::json chart_to_json(const GridChart& chart);
GridChart chart_from_json(const nlohmann::json& j);

nlohmann::json graph_to_json(const SampledGraph& graph, const std::vector<double>* df = nullptr,
                             const nlohmann::json& metadata = nlohmann::json::object());
std::shared_ptr<SampledGraph> graph_from_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

/// One compact dump with a trailing newline; numbers are shortest round-trip.
std::string dump(const nlohmann::json& j);

}  // namespace mingraph
