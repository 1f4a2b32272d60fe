#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "thermobound/grid.hpp"
#include "thermobound/models.hpp"
#include "thermobound/quadrature.hpp"
#include "thermobound/types.hpp"

namespace thermo {

// ---------------------------------------------------------------------------
// Deterministic per-trial RNG streams: trial t of a batch with seed s gets
// its own engine derived from (s, t), so results are identical no matter how
// trials are scheduled.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  return std::mt19937_64(splitmix64(seed + 0x9E3779B97F4A7C15ull * (trial + 1)));
}

// Draw a temperature from the prior via its inverse CDF.
template <class Rng>
double sample_true_temperature(const Prior& prior, Rng& rng) {
  if (!prior.quantile) throw std::domain_error("prior has no quantile function; cannot sample");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return prior.quantile(unit(rng));
}

// v independent measurement outcomes at temperature theta.
template <class Rng>
std::vector<long long> simulate_measurements(const SpinGasLikelihood& lik, double theta,
                                             long long v, Rng& rng) {
  if (v < 1) throw std::domain_error("measurement count v must be >= 1");
  std::binomial_distribution<long long> dist(lik.n, lik.success_prob(theta));
  std::vector<long long> out(static_cast<std::size_t>(v));
  for (auto& r : out) r = dist(rng);
  return out;
}

template <class Rng>
std::vector<long long> simulate_measurements(const NLevelLikelihood& lik, double theta,
                                             long long v, Rng& rng) {
  if (v < 1) throw std::domain_error("measurement count v must be >= 1");
  const double pe = lik.excited_prob(theta);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<long long> out(static_cast<std::size_t>(v));
  for (auto& r : out) r = unit(rng) < pe ? 1 : 0;
  return out;
}

enum class EstimatorKind {
  PosteriorMeanLog,    // exp(E[ln theta | data]); Bayes rule for squared log loss
  PosteriorMeanTheta,  // E[theta | data]
  MaximumLikelihood,   // grid argmax of the likelihood
};

// Node-wise quantities reused across trials of a batch.
struct PosteriorGridCache {
  Array log_prior_weight;  // ln(simpson weight) + ln(measure-adjusted prior)
  Array log_lik_lin;       // coefficient of the sufficient statistic
  Array log_lik_const;     // per-measurement theta-dependent constant
  Array u;                 // ln(theta)
  Array theta;
};

namespace detail {

inline PosteriorGridCache posterior_cache_common(const Prior& prior, const TemperatureGrid& grid) {
  PosteriorGridCache c;
  const Index m = grid.m;
  const Array sw = simpson_weights(m, grid.step());
  c.log_prior_weight.resize(m);
  c.u = grid.log_nodes;
  c.theta = grid.nodes;
  for (Index i = 0; i < m; ++i) {
    const double th = grid.nodes[i];
    // on log grids the integration measure contributes the Jacobian theta
    const double measure =
        grid.mode == SpacingMode::UniformInLogTheta ? th * prior.density(th) : prior.density(th);
    c.log_prior_weight[i] = std::log(sw[i]) + std::log(measure);
  }
  return c;
}

}  // namespace detail

inline PosteriorGridCache make_posterior_cache(const SpinGasLikelihood& lik, const Prior& prior,
                                               const TemperatureGrid& grid) {
  PosteriorGridCache c = detail::posterior_cache_common(prior, grid);
  const Index m = grid.m;
  c.log_lik_lin.resize(m);
  c.log_lik_const.resize(m);
  for (Index i = 0; i < m; ++i) {
    const double x = lik.eps / grid.nodes[i];
    c.log_lik_lin[i] = -x;                                        // coefficient of total count
    c.log_lik_const[i] = -double(lik.n) * std::log1p(std::exp(-x));  // per measurement
  }
  return c;
}

inline PosteriorGridCache make_posterior_cache(const NLevelLikelihood& lik, const Prior& prior,
                                               const TemperatureGrid& grid) {
  PosteriorGridCache c = detail::posterior_cache_common(prior, grid);
  const Index m = grid.m;
  c.log_lik_lin.resize(m);
  c.log_lik_const.resize(m);
  const double log_deg = std::log(double(lik.levels - 1));
  for (Index i = 0; i < m; ++i) {
    const double x = lik.eps / grid.nodes[i];
    c.log_lik_lin[i] = log_deg - x;                                     // coefficient of excited count
    c.log_lik_const[i] = -std::log1p(double(lik.levels - 1) * std::exp(-x));  // per measurement
  }
  return c;
}

// Posterior summary on the cached grid given the sufficient statistic of v
// outcomes.  The log-sum-exp normalization keeps large v safe.
inline double estimate_from_cache(const PosteriorGridCache& c, long long suff, long long v,
                                  EstimatorKind kind) {
  const Index m = c.u.size();
  Array log_lik(m);
  for (Index i = 0; i < m; ++i) {
    log_lik[i] = double(suff) * c.log_lik_lin[i] + double(v) * c.log_lik_const[i];
  }
  if (kind == EstimatorKind::MaximumLikelihood) {
    Index best = 0;
    for (Index i = 1; i < m; ++i) {
      if (log_lik[i] > log_lik[best]) best = i;
    }
    return c.theta[best];
  }
  Array ell = c.log_prior_weight + log_lik;
  const double peak = ell.maxCoeff();
  if (!std::isfinite(peak)) {
    throw EstimationError("posterior vanished everywhere (all log-weights are -inf)");
  }
  double total = 0, mean_u = 0, mean_theta = 0;
  for (Index i = 0; i < m; ++i) {
    const double wgt = std::exp(ell[i] - peak);
    total += wgt;
    mean_u += wgt * c.u[i];
    mean_theta += wgt * c.theta[i];
  }
  if (!(total > 0)) throw EstimationError("posterior normalization is zero");
  if (kind == EstimatorKind::PosteriorMeanTheta) return mean_theta / total;
  return std::exp(mean_u / total);
}

// Bayes-optimal point estimate under squared log loss (or a competitor rule).
template <class Likelihood>
double bayes_log_estimator(std::span<const long long> outcomes, const Likelihood& lik,
                           const Prior& prior, const TemperatureGrid& grid,
                           EstimatorKind kind = EstimatorKind::PosteriorMeanLog) {
  if (outcomes.empty()) throw std::domain_error("estimator needs at least one outcome");
  const PosteriorGridCache cache = make_posterior_cache(lik, prior, grid);
  const long long suff = lik.sufficient_statistic(outcomes);
  return estimate_from_cache(cache, suff, (long long)outcomes.size(), kind);
}

// ---------------------------------------------------------------------------
// Batch simulation of the full estimation pipeline.
// ---------------------------------------------------------------------------

struct TrialRecord {
  double theta_true = 0;
  std::vector<long long> outcomes;
  double estimate = 0;
};

struct TrialBatch {
  long long trials = 0;
  long long v = 0;
  std::uint64_t seed = 0;
  double empirical_mle = 0;    // mean of squared log errors
  double standard_error = 0;   // sample stddev of squared log errors / sqrt(trials)
  std::vector<TrialRecord> records;  // filled only on request
};

// Empirical mean logarithmic error of the chosen estimator: draws theta from
// the prior, simulates v measurements, estimates, and averages
// [ln est - ln theta]^2 over the trials.
template <class Likelihood>
TrialBatch empirical_mle(const Likelihood& lik, const Prior& prior, long long v, long long trials,
                         std::uint64_t seed, const TemperatureGrid& grid,
                         EstimatorKind kind = EstimatorKind::PosteriorMeanLog,
                         bool keep_records = false) {
  if (trials < 100) throw std::domain_error("batch needs at least 100 trials");
  if (v < 1) throw std::domain_error("measurement count v must be >= 1");
  const PosteriorGridCache cache = make_posterior_cache(lik, prior, grid);
  TrialBatch batch;
  batch.trials = trials;
  batch.v = v;
  batch.seed = seed;
  double sum = 0, sum_sq = 0;
  if (keep_records) batch.records.reserve(size_t(trials));
  for (long long t = 0; t < trials; ++t) {
    std::mt19937_64 rng = trial_rng(seed, std::uint64_t(t));
    const double theta = sample_true_temperature(prior, rng);
    const std::vector<long long> outcomes = simulate_measurements(lik, theta, v, rng);
    const long long suff = lik.sufficient_statistic(outcomes);
    const double est = estimate_from_cache(cache, suff, v, kind);
    const double e = std::log(est) - std::log(theta);
    const double sq = e * e;
    sum += sq;
    sum_sq += sq * sq;
    if (keep_records) batch.records.push_back({theta, outcomes, est});
  }
  batch.empirical_mle = sum / double(trials);
  const double var =
      (sum_sq - sum * sum / double(trials)) / double(trials - 1);
  batch.standard_error = std::sqrt(std::max(var, 0.0) / double(trials));
  return batch;
}

// Convenience overload on the default posterior grid (2049 log-spaced nodes).
template <class Likelihood>
TrialBatch empirical_mle(const Likelihood& lik, const Prior& prior, long long v, long long trials,
                         std::uint64_t seed, EstimatorKind kind = EstimatorKind::PosteriorMeanLog) {
  return empirical_mle(lik, prior, v, trials, seed,
                       make_grid(prior.a1, prior.a2, 2049, SpacingMode::UniformInLogTheta), kind);
}

}  // namespace thermo
