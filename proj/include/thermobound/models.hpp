#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <sstream>

#include "thermobound/quadrature.hpp"
#include "thermobound/types.hpp"

namespace thermo {

// ---------------------------------------------------------------------------
// Closed-form Fisher-information kernels.  Templated on the scalar so tests
// can cross-check double against long double.  All exponentials are taken of
// non-positive arguments, so the kernels underflow to 0 gracefully and never
// overflow or produce NaN.
// ---------------------------------------------------------------------------

namespace detail {
template <typename T>
void require_positive(T value, const char* what) {
  if (!(value > T(0))) {
    throw std::domain_error(std::string(what) + " must be positive");
  }
}
}  // namespace detail

// Fisher information of the total-energy measurement on n noninteracting
// two-level spins with gap eps at temperature theta:
//   n eps^2 / theta^4 / (4 cosh^2(eps/(2 theta)))
// evaluated via s = exp(-eps/(2 theta)) so that 1/(2 cosh x) = s/(1+s^2).
template <typename T = double>
T spin_gas_fisher(T theta, long long n, T eps) {
  detail::require_positive(theta, "theta");
  detail::require_positive(eps, "eps");
  if (n < 1) throw std::domain_error("n must be >= 1");
  const T s = std::exp(-eps / (2 * theta));
  const T half_sech = s / (1 + s * s);
  // single-particle value times n, so additivity in n is exact
  const T unit = eps * eps / (theta * theta * theta * theta) * half_sech * half_sech;
  return T(n) * unit;
}

// d/dtheta of spin_gas_fisher; log-derivative form F' = F (-4/theta + eps tanh(eps/(2 theta))/theta^2).
template <typename T = double>
T spin_gas_fisher_derivative(T theta, long long n, T eps) {
  const T f = spin_gas_fisher(theta, n, eps);
  if (f == T(0)) return T(0);
  return f * (-4 / theta + eps * std::tanh(eps / (2 * theta)) / (theta * theta));
}

// Maximum quantum Fisher information of an N-level probe with a single
// ground state and an (N-1)-fold degenerate excited level at gap eps:
//   (N-1) eps^2 e^{eps/theta} / ((N-1+e^{eps/theta})^2 theta^4)
// computed with w = exp(-eps/theta) to avoid overflow at small theta:
//   = (N-1) eps^2 w / ((1+(N-1)w)^2 theta^4)
template <typename T = double>
T nlevel_qfi(T theta, int levels, T eps) {
  detail::require_positive(theta, "theta");
  detail::require_positive(eps, "eps");
  if (levels < 2) throw std::domain_error("level count must be >= 2");
  const T w = std::exp(-eps / theta);
  const T den = 1 + T(levels - 1) * w;
  return T(levels - 1) * eps * eps * w / (den * den * theta * theta * theta * theta);
}

template <typename T = double>
T nlevel_qfi_derivative(T theta, int levels, T eps) {
  const T f = nlevel_qfi(theta, levels, eps);
  if (f == T(0)) return T(0);
  const T w = std::exp(-eps / theta);
  // e^x/(N-1+e^x) = 1/(1+(N-1)e^{-x})
  const T qt = 1 / (1 + T(levels - 1) * w);
  return f * (-4 / theta - eps / (theta * theta) * (1 - 2 * qt));
}

// ---------------------------------------------------------------------------
// Prior over temperature on a finite support [a1, a2].
// ---------------------------------------------------------------------------

struct Prior {
  double a1 = 0;
  double a2 = 0;
  std::function<double(double)> density;
  std::function<double(double)> density_derivative;
  // Inverse CDF for exact sampling; may be empty for user-defined priors.
  std::function<double(double)> quantile;
};

// Scale prior p(theta) = 1/(theta ln(a2/a1)); normalization exact by
// construction, quantile theta = a1 (a2/a1)^u.
inline Prior log_uniform_prior(double a1, double a2) {
  if (!(a1 > 0)) throw std::domain_error("prior lower edge a1 must be positive");
  if (!(a2 > a1)) throw std::domain_error("prior upper edge a2 must exceed a1");
  const double norm = std::log(a2 / a1);
  Prior p;
  p.a1 = a1;
  p.a2 = a2;
  p.density = [norm](double theta) { return 1.0 / (theta * norm); };
  p.density_derivative = [norm](double theta) { return -1.0 / (theta * theta * norm); };
  p.quantile = [a1, a2](double u) { return a1 * std::pow(a2 / a1, u); };
  return p;
}

// Checks the support ordering, positivity on a probe grid, and that the
// density integrates to 1 within tol.
inline void validate_prior(const Prior& prior, double tol = 1e-9) {
  if (!(prior.a1 > 0)) throw std::domain_error("prior lower edge a1 must be positive");
  if (!(prior.a2 > prior.a1)) throw std::domain_error("prior upper edge a2 must exceed a1");
  if (!prior.density || !prior.density_derivative) {
    throw std::domain_error("prior lacks density functions");
  }
  const int probes = 101;
  for (int i = 0; i < probes; ++i) {
    const double th = prior.a1 * std::pow(prior.a2 / prior.a1, double(i) / (probes - 1));
    if (!(prior.density(th) > 0)) {
      throw std::domain_error("prior density must be positive on the support");
    }
  }
  const double total = adaptive_simpson(prior.density, prior.a1, prior.a2, tol * 1e-2);
  if (std::abs(total - 1.0) > tol) {
    throw std::domain_error("prior density integrates to " + std::to_string(total) +
                            ", not 1");
  }
}

// ---------------------------------------------------------------------------
// FisherModel: a positive information function with analytic derivative.
// ---------------------------------------------------------------------------

struct ModelParams {
  std::optional<long long> n;   // spin-gas particle count
  std::optional<int> levels;    // probe level count N
  double eps = 1.0;             // energy gap
  std::optional<double> scale;  // c for the power-law test model F = c/theta^2
};

struct FisherModel {
  ModelKind kind = ModelKind::Classical;
  std::function<double(double)> fisher;
  std::function<double(double)> fisher_derivative;
  ModelParams params;
};

inline FisherModel spin_gas_model(long long n, double eps = 1.0) {
  if (n < 1) throw std::domain_error("n must be >= 1");
  detail::require_positive(eps, "eps");
  FisherModel m;
  m.kind = ModelKind::Classical;
  m.fisher = [n, eps](double th) { return spin_gas_fisher(th, n, eps); };
  m.fisher_derivative = [n, eps](double th) { return spin_gas_fisher_derivative(th, n, eps); };
  m.params.n = n;
  m.params.eps = eps;
  return m;
}

inline FisherModel nlevel_model(int levels, double eps = 1.0) {
  if (levels < 2) throw std::domain_error("level count must be >= 2");
  detail::require_positive(eps, "eps");
  FisherModel m;
  m.kind = ModelKind::Quantum;
  m.fisher = [levels, eps](double th) { return nlevel_qfi(th, levels, eps); };
  m.fisher_derivative = [levels, eps](double th) { return nlevel_qfi_derivative(th, levels, eps); };
  m.params.levels = levels;
  m.params.eps = eps;
  return m;
}

// Scale-invariant test model F = c/theta^2 (the CRLB-like integrand reduces
// to the prior and the bias ODE has a cosh/sinh closed form).
inline FisherModel power_law_model(double c, ModelKind kind = ModelKind::Classical) {
  detail::require_positive(c, "c");
  FisherModel m;
  m.kind = kind;
  m.fisher = [c](double th) { return c / (th * th); };
  m.fisher_derivative = [c](double th) { return -2.0 * c / (th * th * th); };
  m.params.scale = c;
  return m;
}

// 5-point central finite difference, O(h^4).
inline double fd_derivative(const std::function<double(double)>& f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

// Hook for user-defined models.  If no analytic derivative is supplied the
// model falls back to a 5-point finite difference with step theta * 1e-4
// (noise in F' pollutes the BVP right-hand side, so analytic is preferred).
inline FisherModel user_model(ModelKind kind, std::function<double(double)> fisher,
                              std::function<double(double)> fisher_derivative = {}) {
  FisherModel m;
  m.kind = kind;
  m.fisher = std::move(fisher);
  if (fisher_derivative) {
    m.fisher_derivative = std::move(fisher_derivative);
  } else {
    auto f = m.fisher;
    m.fisher_derivative = [f](double th) { return fd_derivative(f, th, th * 1e-4); };
  }
  return m;
}

// ---------------------------------------------------------------------------
// Likelihoods for the Monte-Carlo verification path.
// ---------------------------------------------------------------------------

inline double log_binomial_coefficient(long long n, long long r) {
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(r) + 1.0) -
         std::lgamma(double(n - r) + 1.0);
}

// Total-energy measurement on n noninteracting spins: observing r excited
// spins has probability Binomial(n, q) with q = e^{-eps/theta}/(1+e^{-eps/theta}).
struct SpinGasLikelihood {
  long long n = 1;
  double eps = 1.0;

  using Outcome = long long;

  double success_prob(double theta) const {
    const double w = std::exp(-eps / theta);
    return w / (1.0 + w);
  }

  double log_pmf(long long r, double theta) const {
    if (r < 0 || r > n) throw std::domain_error("outcome r out of range [0, n]");
    detail::require_positive(theta, "theta");
    const double x = eps / theta;
    return log_binomial_coefficient(n, r) - double(r) * x - double(n) * std::log1p(std::exp(-x));
  }

  double pmf(long long r, double theta) const { return std::exp(log_pmf(r, theta)); }

  // Sufficient statistic of an i.i.d. outcome list: total excitation count.
  long long sufficient_statistic(std::span<const long long> outcomes) const {
    long long total = 0;
    for (long long r : outcomes) {
      if (r < 0 || r > n) throw std::domain_error("outcome r out of range [0, n]");
      total += r;
    }
    return total;
  }

  // Joint log-likelihood of v draws up to an outcome-only additive constant.
  double log_joint(long long total, long long v, double theta) const {
    const double x = eps / theta;
    return -double(total) * x - double(n) * double(v) * std::log1p(std::exp(-x));
  }

  FisherModel fisher_model() const { return spin_gas_model(n, eps); }
};

// Effective two-level probe: single ground state, (N-1)-fold degenerate
// excited level.  Outcome 1 = excited, probability (N-1)e^{-x}/(1+(N-1)e^{-x}).
struct NLevelLikelihood {
  int levels = 2;
  double eps = 1.0;

  using Outcome = long long;

  double excited_prob(double theta) const {
    const double w = std::exp(-eps / theta);
    return double(levels - 1) * w / (1.0 + double(levels - 1) * w);
  }

  double log_pmf(long long outcome, double theta) const {
    if (outcome != 0 && outcome != 1) throw std::domain_error("outcome must be 0 or 1");
    detail::require_positive(theta, "theta");
    const double x = eps / theta;
    const double lse = std::log1p(double(levels - 1) * std::exp(-x));
    if (outcome == 1) return std::log(double(levels - 1)) - x - lse;
    return -lse;
  }

  double pmf(long long outcome, double theta) const { return std::exp(log_pmf(outcome, theta)); }

  long long sufficient_statistic(std::span<const long long> outcomes) const {
    long long total = 0;
    for (long long o : outcomes) {
      if (o != 0 && o != 1) throw std::domain_error("outcome must be 0 or 1");
      total += o;
    }
    return total;
  }

  double log_joint(long long excited, long long v, double theta) const {
    const double x = eps / theta;
    const double lse = std::log1p(double(levels - 1) * std::exp(-x));
    return double(excited) * (std::log(double(levels - 1)) - x) - double(v) * lse;
  }

  FisherModel fisher_model() const { return nlevel_model(levels, eps); }
};

}  // namespace thermo
