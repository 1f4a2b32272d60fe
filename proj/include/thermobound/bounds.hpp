#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "thermobound/bvp.hpp"
#include "thermobound/grid.hpp"
#include "thermobound/models.hpp"
#include "thermobound/quadrature.hpp"
#include "thermobound/types.hpp"

namespace thermo {

// One computed precision bound on the mean logarithmic error.
struct BoundReport {
  BoundKind kind = BoundKind::CCRLB;
  double value = 0;  // squared log-temperature units
  long long v = 1;
  ModelParams model_params;
  double a1 = 0, a2 = 0;
  Index grid_nodes = 0;
  double convergence_estimate = 0;  // relative change under one grid coarsening
  std::optional<std::string> bias_solution_ref;  // present for the biased kinds
};

// The bound functional  Int p(theta) [ b^2 + (b' + 1/theta)^2 / (v F) ] dtheta
// evaluated by composite Simpson on the solution's own grid (b is only known
// at the nodes).  On log grids the integral is taken in u = ln(theta).
inline double obb_functional(const BiasSolution& sol, const Prior& prior, const FisherModel& model,
                             long long v) {
  const TemperatureGrid& grid = sol.grid;
  const Index m = grid.m;
  Array integrand(m);
  for (Index i = 0; i < m; ++i) {
    const double th = grid.nodes[i];
    const double p = prior.density(th);
    const double f = model.fisher(th);
    const double bias_term = sol.b[i] * sol.b[i];
    const double slope = sol.b_prime[i] + 1.0 / th;
    if (grid.mode == SpacingMode::UniformInLogTheta) {
      // measure: p dtheta = (theta p) du; slope in u units is theta * b'
      const double slope_u = th * slope;
      integrand[i] = th * p * (bias_term + slope_u * slope_u / (double(v) * th * th * f));
    } else {
      integrand[i] = p * (bias_term + slope * slope / (double(v) * f));
    }
  }
  return integrate_nodes(integrand, grid.step());
}

namespace detail {

inline double crlb_integral(const Prior& prior, const FisherModel& model, long long v,
                            const TemperatureGrid& grid) {
  const Index m = grid.m;
  Array integrand(m);
  for (Index i = 0; i < m; ++i) {
    const double th = grid.nodes[i];
    const double f = model.fisher(th);
    if (!(f > 0)) {
      std::ostringstream os;
      os << "fisher information vanishes at theta = " << th << "; CRLB-like bound undefined";
      throw std::domain_error(os.str());
    }
    const double p = prior.density(th);
    if (grid.mode == SpacingMode::UniformInLogTheta) {
      integrand[i] = th * p / (double(v) * th * th * f);
    } else {
      integrand[i] = p / (th * th * double(v) * f);
    }
  }
  return integrate_nodes(integrand, grid.step());
}

inline double relative_change(double fine, double coarse) {
  return std::abs(fine - coarse) / std::max(std::abs(fine), 1e-300);
}

}  // namespace detail

// Optimal biased bound: solve the bias BVP, then integrate the functional.
// kind follows the model flavor (COBB for classical, QOBB for quantum).
inline BoundReport obb(const Prior& prior, const FisherModel& model, long long v,
                       const TemperatureGrid& grid) {
  if (v < 1) throw std::domain_error("repetition count v must be >= 1");
  if (grid.m < 3) throw std::domain_error("quadrature needs at least 3 nodes");
  const BiasSolution sol = solve_optimal_bias(prior, model, v, grid);
  BoundReport rep;
  rep.kind = model.kind == ModelKind::Classical ? BoundKind::COBB : BoundKind::QOBB;
  rep.value = obb_functional(sol, prior, model, v);
  rep.v = v;
  rep.model_params = model.params;
  rep.a1 = grid.a1;
  rep.a2 = grid.a2;
  rep.grid_nodes = grid.m;
  if (grid.m >= 5) {
    const TemperatureGrid coarse = coarsened(grid);
    const BiasSolution sol_c = solve_optimal_bias(prior, model, v, coarse);
    rep.convergence_estimate = detail::relative_change(rep.value, obb_functional(sol_c, prior, model, v));
  } else {
    rep.convergence_estimate = std::numeric_limits<double>::quiet_NaN();
  }
  std::ostringstream ref;
  ref << "bias[" << to_string(rep.kind) << ",v=" << v << ",m=" << grid.m << "]";
  rep.bias_solution_ref = ref.str();
  return rep;
}

// Cramer-Rao-like bound: Int p / (theta^2 v F) dtheta; no BVP solve.
inline BoundReport crlb_like(const Prior& prior, const FisherModel& model, long long v,
                             const TemperatureGrid& grid) {
  if (v < 1) throw std::domain_error("repetition count v must be >= 1");
  if (grid.m < 3) throw std::domain_error("quadrature needs at least 3 nodes");
  BoundReport rep;
  rep.kind = model.kind == ModelKind::Classical ? BoundKind::CCRLB : BoundKind::QCRLB;
  rep.value = detail::crlb_integral(prior, model, v, grid);
  rep.v = v;
  rep.model_params = model.params;
  rep.a1 = grid.a1;
  rep.a2 = grid.a2;
  rep.grid_nodes = grid.m;
  if (grid.m >= 5) {
    rep.convergence_estimate =
        detail::relative_change(rep.value, detail::crlb_integral(prior, model, v, coarsened(grid)));
  } else {
    rep.convergence_estimate = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sweeps over n, N, or v (reproducing the two benchmark figures).
// ---------------------------------------------------------------------------

enum class SweepVariable { ParticleCount, LevelCount, Repetitions };
enum class ProbeFamily { SpinGas, NLevel, PowerLaw };

inline const char* to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::ParticleCount: return "n";
    case SweepVariable::LevelCount: return "N";
    case SweepVariable::Repetitions: return "v";
  }
  return "?";
}

struct SweepSpec {
  SweepVariable variable = SweepVariable::Repetitions;
  std::vector<long long> values;      // swept values, in output order
  std::vector<long long> probe_sizes; // optional second axis (n or N) for v-sweeps
  ProbeFamily probe = ProbeFamily::SpinGas;
  long long n = 100;     // base spin-gas size
  int levels = 2;        // base level count
  double eps = 1.0;
  double power_law_c = 4.0;
  Prior prior;
  long long v = 1;       // base repetition count
  std::vector<BoundKind> kinds;
  Index grid_m = 2049;
  SpacingMode grid_mode = SpacingMode::UniformInLogTheta;
};

struct SweepRow {
  std::string sweep_var;
  long long sweep_value = 0;
  BoundReport report;
};

namespace detail {

inline FisherModel sweep_model(const SweepSpec& s, long long size) {
  switch (s.probe) {
    case ProbeFamily::SpinGas: return spin_gas_model(size, s.eps);
    case ProbeFamily::NLevel: return nlevel_model(int(size), s.eps);
    case ProbeFamily::PowerLaw: return power_law_model(s.power_law_c);
  }
  throw std::domain_error("unknown probe family");
}

}  // namespace detail

inline std::vector<SweepRow> sweep(const SweepSpec& s) {
  if (s.values.empty()) throw ConfigError("sweep value list is empty", {"sweep.values"});
  if (s.kinds.empty()) throw ConfigError("no bound kinds requested", {"bounds"});
  const ModelKind model_kind = s.probe == ProbeFamily::NLevel ? ModelKind::Quantum : ModelKind::Classical;
  for (BoundKind k : s.kinds) {
    if (flavor_of(k) != model_kind) {
      std::ostringstream os;
      os << "bound kind " << to_string(k) << " does not apply to this probe family";
      throw ConfigError(os.str(), {"bounds"});
    }
  }
  if (s.variable == SweepVariable::ParticleCount && s.probe != ProbeFamily::SpinGas) {
    throw ConfigError("sweep over n requires the spin-gas probe", {"sweep.variable"});
  }
  if (s.variable == SweepVariable::LevelCount && s.probe != ProbeFamily::NLevel) {
    throw ConfigError("sweep over N requires the N-level probe", {"sweep.variable"});
  }
  const TemperatureGrid grid = make_grid(s.prior.a1, s.prior.a2, s.grid_m, s.grid_mode);
  std::vector<long long> sizes = s.probe_sizes;
  if (sizes.empty()) {
    sizes.push_back(s.probe == ProbeFamily::NLevel ? s.levels : s.n);
  }
  std::vector<SweepRow> rows;
  const char* var_name = to_string(s.variable);
  for (long long size : sizes) {
    for (long long value : s.values) {
      long long model_size = size;
      long long v = s.v;
      if (s.variable == SweepVariable::Repetitions) {
        v = value;
      } else {
        model_size = value;
      }
      const FisherModel model = detail::sweep_model(s, model_size);
      for (BoundKind k : s.kinds) {
        SweepRow row;
        row.sweep_var = var_name;
        row.sweep_value = value;
        row.report = is_biased_kind(k) ? obb(s.prior, model, v, grid)
                                       : crlb_like(s.prior, model, v, grid);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// Log-spaced integer sweep values (deduplicated, strictly increasing).
inline std::vector<long long> log_spaced_integers(long long lo, long long hi, int count) {
  if (lo < 1 || hi <= lo || count < 2) throw std::domain_error("bad log-spaced range");
  std::vector<long long> out;
  const double llo = std::log(double(lo)), lhi = std::log(double(hi));
  for (int k = 0; k < count; ++k) {
    const double x = llo + (lhi - llo) * double(k) / double(count - 1);
    const long long v = std::llround(std::exp(x));
    if (out.empty() || v > out.back()) out.push_back(v);
  }
  return out;
}

}  // namespace thermo
