#pragma once

#include <optional>
#include <string>

#include "thermobound/io/table.hpp"

namespace thermo::io {

struct PlotStyle {
  int width = 800;
  int height = 600;
  std::optional<bool> log_x;  // default: log for n-sweeps, linear otherwise
  std::optional<bool> log_y;  // default: log
  std::string title;          // default: "<sweep_var> sweep"
  std::string x_label;        // default: sweep variable name
  std::string y_label = "bound value";
};

// Self-contained SVG 1.1 line plot of a single-variable sweep table.  One
// polyline per (kind, model params) series; CRLB-like kinds are dashed,
// optimal-biased kinds solid; series of one point become a marker.  The
// resolved config is embedded as <metadata>.  No timestamps, no external
// assets; identical tables produce identical bytes.
std::string emit_plot(const Table& table, const PlotStyle& style = {});

}  // namespace thermo::io
