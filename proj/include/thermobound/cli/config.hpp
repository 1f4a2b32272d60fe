#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermobound/bounds.hpp"
#include "thermobound/types.hpp"

namespace thermo::cli {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum class Command { Bound, Sweep, Verify, Plot };

struct ModelConfig {
  std::string kind = "spin_gas";  // spin_gas | n_level | power_law
  long long n = 100;
  int levels = 2;
  double eps = 1.0;
  double c = 4.0;
};

struct PriorConfig {
  std::string family = "log_uniform";
  double a1 = 0.1;
  double a2 = 10.0;
};

struct GridConfig {
  Index m = 2049;
  std::string spacing = "log";  // log | linear
};

struct SweepConfig {
  std::string variable;             // n | N | v
  std::vector<long long> values;
  std::vector<long long> sizes;     // optional second axis for v-sweeps
};

struct McConfig {
  long long trials = 10000;
  std::uint64_t seed = 12345;
  std::string estimator = "posterior_mean_log";
  std::string dump_trials;  // optional per-trial CSV path
};

struct OutputConfig {
  std::string format = "csv";  // csv | json
  std::string path;
  std::string plot_path;
};

struct PlotStyleConfig {
  std::optional<bool> log_x;
  std::optional<bool> log_y;
  std::string title;
};

struct RunConfig {
  Command command = Command::Bound;
  ModelConfig model;
  PriorConfig prior;
  long long v = 1;
  std::vector<BoundKind> bounds;
  GridConfig grid;
  SweepConfig sweep;
  McConfig mc;
  OutputConfig output;
  PlotStyleConfig plot_style;
  std::string input;  // CSV path consumed by the plot command
};

// Parse + validate a configuration document.  All offending fields are
// collected and reported in one ConfigError.
RunConfig parse_run_config(const json& doc);

// The fully-resolved configuration (defaults applied), with stable key
// order; embedded in every output artifact.
ordered_json resolved_config_json(const RunConfig& cfg);

const char* to_string(Command c);

}  // namespace thermo::cli
