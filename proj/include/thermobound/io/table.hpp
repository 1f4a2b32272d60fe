#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "thermobound/bounds.hpp"
#include "thermobound/types.hpp"

namespace thermo::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Shortest text that round-trips a double exactly (17 significant digits).
std::string fmt17(double x);

// One row of the fixed bound-table column contract:
//   kind, sweep_var, sweep_value, value, grid_nodes, convergence_estimate,
//   v, model_params_json
struct TableRow {
  std::string kind;
  std::string sweep_var;                 // empty for single-point runs
  std::optional<double> sweep_value;
  double value = 0;
  long long grid_nodes = 0;
  double convergence_estimate = 0;
  long long v = 1;
  std::string model_params_json;         // compact JSON object
};

struct Table {
  ordered_json config;  // fully-resolved run configuration echo
  std::vector<TableRow> rows;
};

ordered_json model_params_to_json(const ModelParams& p, double a1, double a2);

TableRow row_from_report(const BoundReport& rep, const std::string& sweep_var,
                         std::optional<double> sweep_value);

// RFC-4180-compatible CSV with a mandatory header row; the resolved config
// is embedded as a leading "# config: {...}" comment line.
std::string to_csv(const Table& table);
Table table_from_csv(const std::string& text);

// JSON document: one object, stable key order.
std::string to_json_text(const Table& table);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace thermo::io
