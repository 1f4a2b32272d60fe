#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "thermobound/grid.hpp"
#include "thermobound/models.hpp"
#include "thermobound/quadrature.hpp"
#include "thermobound/types.hpp"

namespace thermo {

// ---------------------------------------------------------------------------
// Generic linear Neumann problem on a uniform grid:
//   y'' + gamma(x) y' - w(x) y = rhs(x),   y'(x_0) = g_lo,  y'(x_last) = g_hi
// discretized with second-order central differences; the boundary conditions
// enter through second-order ghost nodes, preserving global O(h^2).
// ---------------------------------------------------------------------------

struct NeumannProblem {
  Array gamma;
  Array w;
  Array rhs;
  double h = 0;
  double g_lo = 0;
  double g_hi = 0;
};

struct LinearSolveStats {
  bool used_dense_fallback = false;
  double system_residual = 0;  // max |A y - d| / max(1, |d_i|)
  double bc_error = 0;         // derivative-units consistency of the boundary rows
};

namespace detail {

struct Tridiagonal {
  Array lower, diag, upper, d;  // lower[0] and upper[m-1] unused
};

inline Tridiagonal assemble_tridiagonal(const NeumannProblem& p) {
  const Index m = p.gamma.size();
  const double h = p.h, h2 = h * h;
  Tridiagonal t;
  t.lower.resize(m);
  t.diag.resize(m);
  t.upper.resize(m);
  t.d.resize(m);
  for (Index i = 1; i + 1 < m; ++i) {
    t.lower[i] = 1 / h2 - p.gamma[i] / (2 * h);
    t.diag[i] = -2 / h2 - p.w[i];
    t.upper[i] = 1 / h2 + p.gamma[i] / (2 * h);
    t.d[i] = p.rhs[i];
  }
  // ghost elimination: y_{-1} = y_1 - 2 h g_lo, y_m = y_{m-2} + 2 h g_hi
  t.diag[0] = -2 / h2 - p.w[0];
  t.upper[0] = 2 / h2;
  t.d[0] = p.rhs[0] - p.gamma[0] * p.g_lo + 2 * p.g_lo / h;
  t.lower[0] = 0;
  t.diag[m - 1] = -2 / h2 - p.w[m - 1];
  t.lower[m - 1] = 2 / h2;
  t.d[m - 1] = p.rhs[m - 1] - p.gamma[m - 1] * p.g_hi - 2 * p.g_hi / h;
  t.upper[m - 1] = 0;
  return t;
}

// Thomas elimination; returns false when a pivot magnitude drops below the
// guard threshold and the caller should retry with a dense solve.
inline bool thomas_solve(const Tridiagonal& t, Array& y) {
  constexpr double pivot_guard = 1e-300;
  const Index m = t.d.size();
  Array c(m), g(m);
  double den = t.diag[0];
  if (std::abs(den) < pivot_guard) return false;
  c[0] = t.upper[0] / den;
  g[0] = t.d[0] / den;
  for (Index i = 1; i < m; ++i) {
    den = t.diag[i] - t.lower[i] * c[i - 1];
    if (std::abs(den) < pivot_guard) return false;
    c[i] = (i + 1 < m) ? t.upper[i] / den : 0.0;
    g[i] = (t.d[i] - t.lower[i] * g[i - 1]) / den;
  }
  y.resize(m);
  y[m - 1] = g[m - 1];
  for (Index i = m - 2; i >= 0; --i) y[i] = g[i] - c[i] * y[i + 1];
  return true;
}

inline Array dense_solve(const Tridiagonal& t) {
  const Index m = t.d.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd d(m);
  for (Index i = 0; i < m; ++i) {
    A(i, i) = t.diag[i];
    if (i > 0) A(i, i - 1) = t.lower[i];
    if (i + 1 < m) A(i, i + 1) = t.upper[i];
    d[i] = t.d[i];
  }
  Eigen::VectorXd y = A.partialPivLu().solve(d);
  return y.array();
}

inline Array apply_tridiagonal(const Tridiagonal& t, const Array& y) {
  const Index m = y.size();
  Array r(m);
  for (Index i = 0; i < m; ++i) {
    double v = t.diag[i] * y[i];
    if (i > 0) v += t.lower[i] * y[i - 1];
    if (i + 1 < m) v += t.upper[i] * y[i + 1];
    r[i] = v;
  }
  return r;
}

}  // namespace detail

// residual above which a "solved" system is reported as degenerate
inline constexpr double kSolveResidualTolerance = 1e-6;

inline Array solve_neumann_fd(const NeumannProblem& p, LinearSolveStats* stats = nullptr) {
  const Index m = p.gamma.size();
  if (m < 3) throw std::domain_error("Neumann BVP needs at least 3 nodes");
  if (p.w.size() != m || p.rhs.size() != m) throw std::domain_error("coefficient arrays must share the grid size");
  if (!(p.h > 0)) throw std::domain_error("grid step must be positive");
  const detail::Tridiagonal t = detail::assemble_tridiagonal(p);
  Array y;
  bool dense = false;
  if (!detail::thomas_solve(t, y)) {
    dense = true;
    y = detail::dense_solve(t);
  }
  if (!y.allFinite()) {
    throw SolverError("tridiagonal system is singular or numerically degenerate (non-finite solution)");
  }
  LinearSolveStats local;
  local.used_dense_fallback = dense;
  const Array resid = detail::apply_tridiagonal(t, y) - t.d;
  double worst = 0;
  for (Index i = 0; i < m; ++i) {
    worst = std::max(worst, std::abs(resid[i]) / std::max(1.0, std::abs(t.d[i])));
  }
  local.system_residual = worst;
  // boundary-row residual converted to derivative units: the row is the
  // interior stencil with the ghost eliminated, so a row residual rho
  // implies a Neumann violation rho / (2/h -+ gamma)
  const double lo = std::abs(resid[0]) / std::abs(2 / p.h - p.gamma[0]);
  const double hi = std::abs(resid[m - 1]) / std::abs(2 / p.h + p.gamma[m - 1]);
  local.bc_error = std::max(lo, hi);
  if (local.system_residual > kSolveResidualTolerance) {
    std::ostringstream os;
    os << "linear solve left a residual of " << local.system_residual
       << " (tolerance " << kSolveResidualTolerance
       << "); the discretized system is singular or severely ill-conditioned";
    throw SolverError(os.str());
  }
  if (stats) *stats = local;
  return y;
}

// ---------------------------------------------------------------------------
// The optimal-bias boundary-value problem.  In theta coordinates:
//   b'' + [p'/p - F'/F] b' - v F b = F'/(theta F) - p'/(theta p) + 1/theta^2
// with b'(a1) = -1/a1, b'(a2) = -1/a2.  On log grids the equation is
// transformed analytically to u = ln(theta) before discretization; with
// P(u) = theta p(theta) and Phi(u) = theta^2 F(theta) the transformed
// equation is  B_uu + [P'/P - Phi'/Phi] B_u - v Phi B = rhs_theta e^{2u},
// with B_u = -1 at both ends.
// ---------------------------------------------------------------------------

struct BiasSolution {
  TemperatureGrid grid;
  Array b;        // bias of the log-estimator at the nodes
  Array b_prime;  // d b / d theta; edge values are the exact Neumann data
  double residual_norm = 0;  // scaled residual of the discretized system
  double bc_error = 0;       // boundary-condition consistency of the solve
};

namespace detail {

inline void validate_on_grid(const Prior& prior, const FisherModel& model,
                             const TemperatureGrid& grid) {
  if (!model.fisher || !model.fisher_derivative) throw std::domain_error("model lacks fisher functions");
  if (!prior.density || !prior.density_derivative) throw std::domain_error("prior lacks density functions");
  for (Index i = 0; i < grid.m; ++i) {
    const double th = grid.nodes[i];
    if (!(model.fisher(th) > 0)) {
      std::ostringstream os;
      os << "fisher information must be positive on the support; found "
         << model.fisher(th) << " at theta = " << th;
      throw std::domain_error(os.str());
    }
    if (!(prior.density(th) > 0)) {
      std::ostringstream os;
      os << "prior density must be positive on the support; found "
         << prior.density(th) << " at theta = " << th;
      throw std::domain_error(os.str());
    }
  }
}

// Coefficient arrays of the bias ODE in the grid's native coordinate.
inline NeumannProblem assemble_bias_problem(const Prior& prior, const FisherModel& model,
                                            long long v, const TemperatureGrid& grid) {
  const Index m = grid.m;
  NeumannProblem p;
  p.gamma.resize(m);
  p.w.resize(m);
  p.rhs.resize(m);
  p.h = grid.step();
  for (Index i = 0; i < m; ++i) {
    const double th = grid.nodes[i];
    const double pd = prior.density(th), pdd = prior.density_derivative(th);
    const double f = model.fisher(th), fd = model.fisher_derivative(th);
    const double dlog_p = pdd / pd;  // p'/p
    const double dlog_f = fd / f;    // F'/F
    const double rhs_theta = dlog_f / th - dlog_p / th + 1.0 / (th * th);
    if (grid.mode == SpacingMode::UniformInLogTheta) {
      p.gamma[i] = th * (dlog_p - dlog_f) - 1.0;
      p.w[i] = double(v) * th * th * f;
      p.rhs[i] = th * th * rhs_theta;
    } else {
      p.gamma[i] = dlog_p - dlog_f;
      p.w[i] = double(v) * f;
      p.rhs[i] = rhs_theta;
    }
  }
  if (grid.mode == SpacingMode::UniformInLogTheta) {
    p.g_lo = -1.0;
    p.g_hi = -1.0;
  } else {
    p.g_lo = -1.0 / grid.a1;
    p.g_hi = -1.0 / grid.a2;
  }
  return p;
}

}  // namespace detail

inline BiasSolution solve_optimal_bias(const Prior& prior, const FisherModel& model, long long v,
                                       const TemperatureGrid& grid) {
  if (v < 1) throw std::domain_error("repetition count v must be >= 1");
  detail::validate_on_grid(prior, model, grid);
  const NeumannProblem p = detail::assemble_bias_problem(prior, model, v, grid);
  LinearSolveStats stats;
  BiasSolution sol;
  sol.grid = grid;
  sol.b = solve_neumann_fd(p, &stats);
  sol.residual_norm = stats.system_residual;
  sol.bc_error = stats.bc_error;
  const Index m = grid.m;
  const double h = grid.step();
  sol.b_prime.resize(m);
  if (grid.mode == SpacingMode::UniformInLogTheta) {
    for (Index i = 1; i + 1 < m; ++i) {
      sol.b_prime[i] = (sol.b[i + 1] - sol.b[i - 1]) / (2 * h) / grid.nodes[i];
    }
  } else {
    for (Index i = 1; i + 1 < m; ++i) {
      sol.b_prime[i] = (sol.b[i + 1] - sol.b[i - 1]) / (2 * h);
    }
  }
  // the Neumann data are known exactly; use them at the edges
  sol.b_prime[0] = -1.0 / grid.a1;
  sol.b_prime[m - 1] = -1.0 / grid.a2;
  return sol;
}

namespace detail {

// Max |y'' + gamma y' - w y - rhs| over interior nodes 2 .. m-3 using
// 4th-order central stencils, each scaled by max(1, |rhs_i|).
inline double residual_4th_order(const Array& y, const NeumannProblem& p) {
  const Index m = y.size();
  if (m < 7) throw std::domain_error("residual check needs at least 7 nodes");
  const double h = p.h;
  double worst = 0;
  for (Index i = 2; i + 2 < m; ++i) {
    const double d1 = (y[i - 2] - 8 * y[i - 1] + 8 * y[i + 1] - y[i + 2]) / (12 * h);
    const double d2 =
        (-y[i - 2] + 16 * y[i - 1] - 30 * y[i] + 16 * y[i + 1] - y[i + 2]) / (12 * h * h);
    const double res = d2 + p.gamma[i] * d1 - p.w[i] * y[i] - p.rhs[i];
    worst = std::max(worst, std::abs(res) / std::max(1.0, std::abs(p.rhs[i])));
  }
  return worst;
}

}  // namespace detail

// Independent diagnostic: recompute the ODE residual at interior nodes with
// 4th-order central stencils (nodes 2 .. m-3).  For a discrete second-order
// solution this measures the local truncation error, not roundoff.
inline double euler_lagrange_residual(const BiasSolution& sol, const Prior& prior,
                                      const FisherModel& model, long long v) {
  const TemperatureGrid& grid = sol.grid;
  if (sol.b.size() != grid.m) throw std::domain_error("solution does not match its grid");
  const NeumannProblem p = detail::assemble_bias_problem(prior, model, v, grid);
  return detail::residual_4th_order(sol.b, p);
}

// ---------------------------------------------------------------------------
// Grid-refinement driver: doubles the node count until the downstream bound
// value (supplied by the caller) is stable to rel_tol, then Richardson-
// extrapolates assuming second order.
// ---------------------------------------------------------------------------

struct ConvergenceReport {
  std::vector<Index> grid_sizes;
  std::vector<double> values;
  double extrapolated = 0;
  double order = std::numeric_limits<double>::quiet_NaN();
  double rel_change = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

struct RefinedBias {
  BiasSolution solution;
  ConvergenceReport report;
};

inline RefinedBias refine_until_converged(
    const Prior& prior, const FisherModel& model, long long v, Index m0, double rel_tol,
    const std::function<double(const BiasSolution&)>& bound_value,
    SpacingMode mode = SpacingMode::UniformInLogTheta) {
  if (m0 < 65) throw std::domain_error("refinement needs m0 >= 65");
  if (!(rel_tol > 0)) throw std::domain_error("rel_tol must be positive");
  constexpr int max_doublings = 12;
  TemperatureGrid grid = make_grid(prior.a1, prior.a2, m0, mode);
  BiasSolution sol = solve_optimal_bias(prior, model, v, grid);
  ConvergenceReport rep;
  rep.grid_sizes.push_back(grid.m);
  rep.values.push_back(bound_value(sol));
  for (int k = 0; k < max_doublings; ++k) {
    grid = refined(grid);
    sol = solve_optimal_bias(prior, model, v, grid);
    const double val = bound_value(sol);
    const double prev = rep.values.back();
    rep.grid_sizes.push_back(grid.m);
    rep.values.push_back(val);
    rep.rel_change = std::abs(val - prev) / std::max(std::abs(val), 1e-300);
    if (rep.rel_change <= rel_tol) {
      rep.converged = true;
      rep.extrapolated = val + (val - prev) / 3.0;  // O(h^2) Richardson
      const Index nv = Index(rep.values.size());
      if (nv >= 3) {
        const double d1 = std::abs(rep.values[nv - 2] - rep.values[nv - 3]);
        const double d2 = std::abs(rep.values[nv - 1] - rep.values[nv - 2]);
        if (d1 > 0 && d2 > 0) rep.order = std::log2(d1 / d2);
      }
      return {std::move(sol), std::move(rep)};
    }
  }
  std::ostringstream os;
  os << "bound value did not stabilize to rel_tol = " << rel_tol << " within " << max_doublings
     << " grid doublings (last change " << rep.rel_change << ")";
  throw ConvergenceError(os.str(), rep.values);
}

}  // namespace thermo
