#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "thermobound/bounds.hpp"
#include "thermobound/bvp.hpp"

using namespace thermo;

namespace {

double rel_err(double got, double want) { return std::abs(got / want - 1.0); }

// Closed form for F = c/theta^2 with a log-uniform prior: in u = ln(theta)
// the bias equation reduces to B'' = v c B with B'(u1) = B'(u2) = -1, so
// B(u) = A cosh(s u) + C sinh(s u), s = sqrt(v c), with A and C from the
// 2x2 boundary system.
struct CoshSinhBias {
  double s = 0, A = 0, C = 0;
  double value(double u) const { return A * std::cosh(s * u) + C * std::sinh(s * u); }
  double deriv_u(double u) const { return s * (A * std::sinh(s * u) + C * std::cosh(s * u)); }
};

CoshSinhBias closed_form_bias(double c, long long v, double a1, double a2) {
  CoshSinhBias cf;
  cf.s = std::sqrt(double(v) * c);
  const double u1 = std::log(a1), u2 = std::log(a2);
  const double m11 = cf.s * std::sinh(cf.s * u1), m12 = cf.s * std::cosh(cf.s * u1);
  const double m21 = cf.s * std::sinh(cf.s * u2), m22 = cf.s * std::cosh(cf.s * u2);
  const double det = m11 * m22 - m12 * m21;
  cf.A = (m12 - m22) / det;
  cf.C = (m21 - m11) / det;
  return cf;
}

// analytic OBB values for c = 4 on [0.1, 10] (50-digit quadrature of the
// closed-form bias, cross-checked against the symbolic antiderivative)
constexpr double kAnalyticObbV1 = 0.19572404603851346;
constexpr double kAnalyticObbV10 = 0.023283300327429453;

}  // namespace

TEST_CASE("closed-form oracle sanity: symmetric interval collapses to -sinh/cosh") {
  const CoshSinhBias cf = closed_form_bias(4.0, 1, 0.1, 10.0);
  CHECK(std::abs(cf.A) < 1e-15);
  CHECK(rel_err(cf.value(std::log(10.0)), -0.4999000099990001) < 1e-12);
  CHECK(rel_err(cf.deriv_u(std::log(10.0)), -1.0) < 1e-12);
  CHECK(rel_err(cf.deriv_u(std::log(0.1)), -1.0) < 1e-12);
}

TEST_CASE("engine: constant coefficients with zero-Neumann give a constant solution") {
  // modest node count keeps the 1/h^2 roundoff amplification below 1e-12
  const Index m = 33;
  const double vc = 6.0, k = 0.7;
  NeumannProblem p;
  p.gamma = Array::Zero(m);
  p.w = Array::Constant(m, vc);
  p.rhs = Array::Constant(m, k);
  p.h = 1.0 / double(m - 1);
  p.g_lo = p.g_hi = 0.0;
  LinearSolveStats stats;
  const Array y = solve_neumann_fd(p, &stats);
  for (Index i = 0; i < m; ++i) CHECK(std::abs(y[i] + k / vc) < 1e-12);
  CHECK(detail::residual_4th_order(y, p) < 1e-12);
  CHECK(stats.system_residual < 1e-12);
  CHECK_FALSE(stats.used_dense_fallback);
}

TEST_CASE("engine: exactly singular system is reported") {
  const Index m = 101;
  NeumannProblem p;
  p.gamma = Array::Zero(m);
  p.w = Array::Zero(m);  // pure Neumann Laplacian: constant nullspace
  p.rhs = Array::Constant(m, 1.0);  // incompatible right-hand side
  p.h = 0.01;
  p.g_lo = p.g_hi = 0.0;
  CHECK_THROWS_AS(solve_neumann_fd(p), SolverError);
}

TEST_CASE("engine: tiny pivot falls back to the dense solve") {
  // with h = 1 the first rows become diag0 = -2 - w0, upper0 = 2; choosing
  // w0 = -4, w1 = -3 makes the second forward-elimination pivot exactly 0
  const Index m = 7;
  NeumannProblem p;
  p.gamma = Array::Zero(m);
  p.w = Array::Constant(m, 1.0);
  p.w[0] = -4.0;
  p.w[1] = -3.0;
  p.rhs = Array::Constant(m, 0.3);
  p.h = 1.0;
  p.g_lo = p.g_hi = 0.0;
  LinearSolveStats stats;
  const Array y = solve_neumann_fd(p, &stats);
  CHECK(stats.used_dense_fallback);
  CHECK(y.allFinite());
  CHECK(stats.system_residual < 1e-10);
}

TEST_CASE("scale-invariant case: solver matches the cosh/sinh closed form") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = power_law_model(4.0);
  for (long long v : {1LL, 10LL}) {
    const CoshSinhBias cf = closed_form_bias(4.0, v, 0.1, 10.0);
    const TemperatureGrid grid = make_grid(0.1, 10.0, 4097);
    const BiasSolution sol = solve_optimal_bias(prior, model, v, grid);
    double worst = 0;
    for (Index i = 0; i < grid.m; ++i) {
      worst = std::max(worst, std::abs(sol.b[i] - cf.value(grid.log_nodes[i])));
    }
    CHECK(worst < 1e-6);
    CHECK(sol.bc_error < 1e-8);
    CHECK(sol.residual_norm < 1e-6);
  }
}

TEST_CASE("scale-invariant case: right-hand side vanishes identically") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = power_law_model(4.0);
  for (SpacingMode mode : {SpacingMode::UniformInLogTheta, SpacingMode::UniformInTheta}) {
    const TemperatureGrid grid = make_grid(0.1, 10.0, 257, mode);
    const NeumannProblem p = detail::assemble_bias_problem(prior, model, 1, grid);
    for (Index i = 0; i < grid.m; ++i) {
      const double scale = mode == SpacingMode::UniformInTheta
                               ? 1.0 / (grid.nodes[i] * grid.nodes[i])
                               : 1.0;
      CHECK(std::abs(p.rhs[i]) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("log-grid transformation identity: rhs_u equals -gamma_u") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = spin_gas_model(100);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 513);
  const NeumannProblem p = detail::assemble_bias_problem(prior, model, 3, grid);
  for (Index i = 0; i < grid.m; ++i) {
    CHECK(std::abs(p.rhs[i] + p.gamma[i]) < 1e-11 * std::max(1.0, std::abs(p.gamma[i])));
  }
}

TEST_CASE("second-order convergence against the closed form") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = power_law_model(4.0);
  const CoshSinhBias cf = closed_form_bias(4.0, 1, 0.1, 10.0);
  std::vector<double> errs;
  for (Index m : {129, 257, 513, 1025}) {
    const TemperatureGrid grid = make_grid(0.1, 10.0, m);
    const BiasSolution sol = solve_optimal_bias(prior, model, 1, grid);
    double worst = 0;
    for (Index i = 0; i < m; ++i) {
      worst = std::max(worst, std::abs(sol.b[i] - cf.value(grid.log_nodes[i])));
    }
    errs.push_back(worst);
  }
  for (size_t i = 0; i + 1 < errs.size(); ++i) {
    const double ratio = errs[i] / errs[i + 1];
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
  }
}

TEST_CASE("log-grid and theta-grid discretizations agree after extrapolation") {
  const Prior prior = log_uniform_prior(1.0, 2.0);
  const FisherModel model = spin_gas_model(100);
  auto extrapolated = [&](SpacingMode mode) {
    double prev = 0, last = 0;
    for (Index m : {1025, 2049}) {
      const TemperatureGrid grid = make_grid(1.0, 2.0, m, mode);
      const BiasSolution sol = solve_optimal_bias(prior, model, 1, grid);
      prev = last;
      last = obb_functional(sol, prior, model, 1);
    }
    return last + (last - prev) / 3.0;
  };
  const double via_u = extrapolated(SpacingMode::UniformInLogTheta);
  const double via_theta = extrapolated(SpacingMode::UniformInTheta);
  CHECK(rel_err(via_u, via_theta) < 1e-8);
}

TEST_CASE("spin gas n=100: solve diagnostics and independent dense cross-check") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = spin_gas_model(100);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 2049);
  const BiasSolution sol = solve_optimal_bias(prior, model, 1, grid);
  CHECK(sol.bc_error <= 1e-8);
  CHECK(sol.residual_norm <= 1e-6);
  CHECK(sol.b_prime[0] == -1.0 / 0.1);
  CHECK(sol.b_prime[grid.m - 1] == -1.0 / 10.0);

  // independent dense assembly of the same discretization in u coordinates
  const Index m = grid.m;
  const double h = grid.step();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd d(m);
  for (Index i = 0; i < m; ++i) {
    const double th = grid.nodes[i];
    const double gamma =
        th * (prior.density_derivative(th) / prior.density(th) -
              model.fisher_derivative(th) / model.fisher(th)) - 1.0;
    const double w = th * th * model.fisher(th);
    const double rhs = -gamma;  // scale-free structure of the log-coordinate equation
    if (i == 0) {
      A(0, 0) = -2 / (h * h) - w;
      A(0, 1) = 2 / (h * h);
      d(0) = rhs - gamma * (-1.0) + 2 * (-1.0) / h;
    } else if (i == m - 1) {
      A(i, i) = -2 / (h * h) - w;
      A(i, i - 1) = 2 / (h * h);
      d(i) = rhs - gamma * (-1.0) - 2 * (-1.0) / h;
    } else {
      A(i, i - 1) = 1 / (h * h) - gamma / (2 * h);
      A(i, i) = -2 / (h * h) - w;
      A(i, i + 1) = 1 / (h * h) + gamma / (2 * h);
      d(i) = rhs;
    }
  }
  const Eigen::VectorXd dense = A.fullPivLu().solve(d);
  double worst = 0;
  for (Index i = 0; i < m; ++i) worst = std::max(worst, std::abs(dense[i] - sol.b[i]));
  CHECK(worst < 1e-8);
}

TEST_CASE("independent 4th-order residual diagnostic") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = power_law_model(4.0);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 4097);
  const CoshSinhBias cf = closed_form_bias(4.0, 1, 0.1, 10.0);

  BiasSolution exact;
  exact.grid = grid;
  exact.b.resize(grid.m);
  exact.b_prime.resize(grid.m);
  for (Index i = 0; i < grid.m; ++i) {
    exact.b[i] = cf.value(grid.log_nodes[i]);
    exact.b_prime[i] = cf.deriv_u(grid.log_nodes[i]) / grid.nodes[i];
  }
  CHECK(euler_lagrange_residual(exact, prior, model, 1) < 1e-8);

  // negative control: a 1e-3 perturbation must be flagged far above tolerance
  BiasSolution noisy = exact;
  std::mt19937 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index i = 0; i < grid.m; ++i) noisy.b[i] += 1e-3 * gauss(rng);
  CHECK(euler_lagrange_residual(noisy, prior, model, 1) > 1e-6);
  CHECK(euler_lagrange_residual(noisy, prior, model, 1) > 1.0);
}

TEST_CASE("solves are deterministic") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = spin_gas_model(50);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 1025);
  const BiasSolution s1 = solve_optimal_bias(prior, model, 2, grid);
  const BiasSolution s2 = solve_optimal_bias(prior, model, 2, grid);
  CHECK((s1.b == s2.b).all());
  CHECK((s1.b_prime == s2.b_prime).all());
  CHECK(s1.residual_norm == s2.residual_norm);
}

TEST_CASE("nonpositive Fisher information on the grid is rejected") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel bad = user_model(
      ModelKind::Classical, [](double th) { return th > 5.0 ? 0.0 : 1.0; },
      [](double) { return 0.0; });
  const TemperatureGrid grid = make_grid(0.1, 10.0, 129);
  CHECK_THROWS_AS(solve_optimal_bias(prior, bad, 1, grid), std::domain_error);
  CHECK_THROWS_WITH_AS(solve_optimal_bias(prior, bad, 1, grid),
                       doctest::Contains("theta"), std::domain_error);
}

TEST_CASE("refine_until_converged reaches the analytic bound") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = power_law_model(4.0);
  auto bound = [&](const BiasSolution& sol) { return obb_functional(sol, prior, model, 1); };
  const RefinedBias r = refine_until_converged(prior, model, 1, 65, 1e-6, bound);
  CHECK(r.report.converged);
  CHECK(rel_err(r.report.extrapolated, kAnalyticObbV1) < 1e-6);
  CHECK(r.report.order == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("refine_until_converged with a loose tolerance stops after one doubling") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = power_law_model(4.0);
  auto bound = [&](const BiasSolution& sol) { return obb_functional(sol, prior, model, 1); };
  const RefinedBias r = refine_until_converged(prior, model, 1, 65, 10.0, bound);
  CHECK(r.report.converged);
  CHECK(r.report.values.size() == 2);
  CHECK(r.solution.grid.m == 129);
}

TEST_CASE("refine_until_converged reports non-convergence for discontinuous F") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel jumpy = user_model(
      ModelKind::Classical,
      [](double th) { return (th > 1.234567 ? 40.0 : 4.0) / (th * th); },
      [](double th) { return (th > 1.234567 ? -80.0 : -8.0) / (th * th * th); });
  auto bound = [&](const BiasSolution& sol) { return obb_functional(sol, prior, jumpy, 1); };
  CHECK_THROWS_AS(refine_until_converged(prior, jumpy, 1, 65, 1e-9, bound), ConvergenceError);
  try {
    refine_until_converged(prior, jumpy, 1, 65, 1e-9, bound);
  } catch (const ConvergenceError& e) {
    CHECK(e.values.size() == 13);  // m0 plus 12 doublings
  }
}

TEST_CASE("refine_until_converged preconditions") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const FisherModel model = power_law_model(4.0);
  auto bound = [&](const BiasSolution& sol) { return obb_functional(sol, prior, model, 1); };
  CHECK_THROWS_AS(refine_until_converged(prior, model, 1, 33, 1e-6, bound), std::domain_error);
  CHECK_THROWS_AS(refine_until_converged(prior, model, 1, 65, 0.0, bound), std::domain_error);
}

TEST_CASE("grid construction invariants") {
  const TemperatureGrid g = make_grid(0.1, 10.0, 1025);
  CHECK(g.nodes[0] == 0.1);
  CHECK(g.nodes[g.m - 1] == 10.0);
  const double h = g.step();
  for (Index i = 0; i + 1 < g.m; ++i) {
    CHECK(g.nodes[i + 1] > g.nodes[i]);
    CHECK(std::abs((g.log_nodes[i + 1] - g.log_nodes[i]) - h) < 1e-12);
    CHECK(std::abs(std::log(g.nodes[i]) - g.log_nodes[i]) < 1e-14);
  }
  const TemperatureGrid lin = make_grid(1.0, 2.0, 11, SpacingMode::UniformInTheta);
  CHECK(lin.nodes[5] == doctest::Approx(1.5).epsilon(1e-14));
  CHECK_THROWS_AS(make_grid(0.0, 1.0, 11), std::domain_error);
  CHECK_THROWS_AS(make_grid(2.0, 1.0, 11), std::domain_error);
  CHECK_THROWS_AS(make_grid(1.0, 2.0, 2), std::domain_error);
  CHECK(refined(g).m == 2049);
  CHECK(coarsened(g).m == 513);
}
