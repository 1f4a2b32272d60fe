#pragma once

#include <cmath>

#include "thermobound/types.hpp"

namespace thermo {

// Discretization of the temperature interval [a1, a2].  log_nodes is an
// exact arithmetic progression in UniformInLogTheta mode; endpoints of
// nodes are pinned to a1 and a2 in both modes.
struct TemperatureGrid {
  double a1 = 0;
  double a2 = 0;
  Index m = 0;
  SpacingMode mode = SpacingMode::UniformInLogTheta;
  Array nodes;      // temperatures, strictly increasing
  Array log_nodes;  // ln(nodes)

  // Native step: in u = ln(theta) for log grids, in theta otherwise.
  double step() const {
    return mode == SpacingMode::UniformInLogTheta ? (log_nodes[m - 1] - log_nodes[0]) / double(m - 1)
                                                  : (nodes[m - 1] - nodes[0]) / double(m - 1);
  }
};

inline TemperatureGrid make_grid(double a1, double a2, Index m,
                                 SpacingMode mode = SpacingMode::UniformInLogTheta) {
  if (!(a1 > 0)) throw std::domain_error("grid lower edge a1 must be positive");
  if (!(a2 > a1)) throw std::domain_error("grid upper edge a2 must exceed a1");
  if (m < 3) throw std::domain_error("grid needs at least 3 nodes");
  TemperatureGrid g;
  g.a1 = a1;
  g.a2 = a2;
  g.m = m;
  g.mode = mode;
  g.nodes.resize(m);
  g.log_nodes.resize(m);
  if (mode == SpacingMode::UniformInLogTheta) {
    const double u1 = std::log(a1), u2 = std::log(a2);
    const double h = (u2 - u1) / double(m - 1);
    for (Index i = 0; i < m; ++i) {
      g.log_nodes[i] = u1 + double(i) * h;
      g.nodes[i] = std::exp(g.log_nodes[i]);
    }
  } else {
    const double h = (a2 - a1) / double(m - 1);
    for (Index i = 0; i < m; ++i) {
      g.nodes[i] = a1 + double(i) * h;
      g.log_nodes[i] = std::log(g.nodes[i]);
    }
  }
  g.nodes[0] = a1;
  g.nodes[m - 1] = a2;
  g.log_nodes[0] = std::log(a1);
  g.log_nodes[m - 1] = std::log(a2);
  return g;
}

// Nested refinement: keeps all nodes, inserts midpoints (m -> 2m-1).
inline TemperatureGrid refined(const TemperatureGrid& g) {
  return make_grid(g.a1, g.a2, 2 * g.m - 1, g.mode);
}

// Nested coarsening for odd m (m -> (m+1)/2).
inline TemperatureGrid coarsened(const TemperatureGrid& g) {
  return make_grid(g.a1, g.a2, (g.m + 1) / 2, g.mode);
}

}  // namespace thermo
