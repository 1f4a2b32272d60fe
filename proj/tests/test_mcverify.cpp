#include <doctest.h>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "thermobound/bounds.hpp"
#include "thermobound/mcverify.hpp"

using namespace thermo;

namespace toy {

// Test-only likelihood whose posterior is exactly symmetric in ln(theta)
// under a log-uniform prior: each measurement contributes exp(-u^2).
struct SymmetricToy {
  using Outcome = long long;
  long long sufficient_statistic(std::span<const long long>) const { return 0; }
};

thermo::PosteriorGridCache make_posterior_cache(const SymmetricToy&, const thermo::Prior& prior,
                                                const thermo::TemperatureGrid& grid) {
  thermo::PosteriorGridCache c = thermo::detail::posterior_cache_common(prior, grid);
  c.log_lik_lin = thermo::Array::Zero(grid.m);
  c.log_lik_const = -(grid.log_nodes * grid.log_nodes);
  return c;
}

// Likelihood whose posterior underflows to zero everywhere.
struct VanishingToy {
  using Outcome = long long;
  long long sufficient_statistic(std::span<const long long>) const { return 0; }
};

thermo::PosteriorGridCache make_posterior_cache(const VanishingToy&, const thermo::Prior& prior,
                                                const thermo::TemperatureGrid& grid) {
  thermo::PosteriorGridCache c = thermo::detail::posterior_cache_common(prior, grid);
  c.log_lik_lin = thermo::Array::Zero(grid.m);
  c.log_lik_const =
      thermo::Array::Constant(grid.m, -std::numeric_limits<double>::infinity());
  return c;
}

}  // namespace toy

namespace {

double rel_err(double got, double want) { return std::abs(got / want - 1.0); }

}  // namespace

TEST_CASE("log-uniform quantile: edges and geometric midpoint") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  CHECK(prior.quantile(0.0) == 0.1);
  CHECK(std::abs(prior.quantile(0.5) - 1.0) < 1e-13);
  CHECK(std::abs(prior.quantile(1.0) - 10.0) < 1e-12);
}

TEST_CASE("sampled temperatures have the log-uniform mean of ln(theta)") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  std::mt19937_64 rng(2024);
  const int draws = 100000;
  double sum = 0, sum_sq = 0;
  for (int i = 0; i < draws; ++i) {
    const double u = std::log(sample_true_temperature(prior, rng));
    sum += u;
    sum_sq += u * u;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt((sum_sq - sum * sum / draws) / (draws - 1));
  const double se = sd / std::sqrt(double(draws));
  // analytic mean of ln(theta) is ln(a1 a2)/2 = 0; sd is ln(a2/a1)/sqrt(12)
  CHECK(std::abs(mean) < 3 * se);
  CHECK(rel_err(sd, std::log(100.0) / std::sqrt(12.0)) < 0.02);
}

TEST_CASE("sampling a prior without a quantile is rejected") {
  Prior p = log_uniform_prior(0.1, 10.0);
  p.quantile = nullptr;
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_true_temperature(p, rng), std::domain_error);
}

TEST_CASE("spin-gas outcomes approach the uniform limit at high temperature") {
  const SpinGasLikelihood lik{1, 1.0};
  std::mt19937_64 rng(7);
  const int draws = 100000;
  long long excited = 0;
  for (int i = 0; i < draws; ++i) excited += simulate_measurements(lik, 1e9, 1, rng)[0];
  const double frac = double(excited) / draws;
  const double se = std::sqrt(0.25 / draws);
  CHECK(std::abs(frac - 0.5) < 3 * se);
}

TEST_CASE("N-level outcomes match the excited-state probability") {
  const NLevelLikelihood lik{2, 1.0};
  std::mt19937_64 rng(8);
  const int draws = 100000;
  long long excited = 0;
  for (int i = 0; i < draws; ++i) excited += simulate_measurements(lik, 1.0, 1, rng)[0];
  const double expect = 0.26894142136999512;  // e^-1/(1+e^-1)
  const double se = std::sqrt(expect * (1 - expect) / draws);
  CHECK(std::abs(double(excited) / draws - expect) < 3 * se);
}

TEST_CASE("simulate_measurements returns exactly v outcomes") {
  std::mt19937_64 rng(9);
  CHECK(simulate_measurements(SpinGasLikelihood{10, 1.0}, 1.0, 5, rng).size() == 5);
  CHECK(simulate_measurements(NLevelLikelihood{2, 1.0}, 1.0, 5, rng).size() == 5);
  CHECK_THROWS_AS(simulate_measurements(SpinGasLikelihood{10, 1.0}, 1.0, 0, rng),
                  std::domain_error);
}

TEST_CASE("estimator rejects an empty outcome list") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 257);
  const std::vector<long long> none;
  CHECK_THROWS_AS(bayes_log_estimator(std::span<const long long>(none), SpinGasLikelihood{10, 1.0},
                                      prior, grid),
                  std::domain_error);
}

TEST_CASE("estimator returns the symmetry point of a log-symmetric posterior") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 2049);
  const std::vector<long long> one{0};
  const double est =
      bayes_log_estimator(std::span<const long long>(one), toy::SymmetricToy{}, prior, grid);
  CHECK(std::abs(est - 1.0) < 1e-12);
}

TEST_CASE("an everywhere-vanishing posterior raises an estimation error") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 257);
  const std::vector<long long> one{0};
  CHECK_THROWS_AS(
      bayes_log_estimator(std::span<const long long>(one), toy::VanishingToy{}, prior, grid),
      EstimationError);
}

TEST_CASE("posterior concentrates around the true temperature") {
  // spin gas n=100, theta_true = 1, v = 100: the estimate should land in
  // [0.9, 1.1] in at least 99 of 100 seeded runs (a ~4.4 sigma window)
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 2049);
  const SpinGasLikelihood lik{100, 1.0};
  int inside = 0;
  for (int s = 0; s < 100; ++s) {
    std::mt19937_64 rng = trial_rng(5000, std::uint64_t(s));
    const std::vector<long long> outcomes = simulate_measurements(lik, 1.0, 100, rng);
    const double est = bayes_log_estimator(std::span<const long long>(outcomes), lik, prior, grid);
    if (est >= 0.9 && est <= 1.1) ++inside;
  }
  CHECK(inside >= 99);
}

TEST_CASE("empirical MLE respects the optimal biased bound") {
  const Prior wide = log_uniform_prior(0.1, 10.0);
  const TemperatureGrid wgrid = make_grid(0.1, 10.0, 2049);
  const SpinGasLikelihood lik{10, 1.0};
  const TrialBatch b = empirical_mle(lik, wide, 5, 10000, 42, wgrid);
  const double cobb = obb(wide, spin_gas_model(10), 5, wgrid).value;
  CHECK(b.empirical_mle >= 0);
  CHECK(b.empirical_mle >= cobb - 3 * b.standard_error);

  const Prior narrow = log_uniform_prior(0.1, 1.0);
  const TemperatureGrid ngrid = make_grid(0.1, 1.0, 2049);
  const NLevelLikelihood nlik{2, 1.0};
  const TrialBatch nb = empirical_mle(nlik, narrow, 1, 10000, 43, ngrid);
  const double qobb = obb(narrow, nlevel_model(2), 1, ngrid).value;
  CHECK(nb.empirical_mle >= qobb - 3 * nb.standard_error);
}

TEST_CASE("empirical MLE approaches the bound at large v") {
  const Prior narrow = log_uniform_prior(0.1, 1.0);
  const TemperatureGrid grid = make_grid(0.1, 1.0, 2049);
  const NLevelLikelihood lik{2, 1.0};
  const TrialBatch b = empirical_mle(lik, narrow, 200, 10000, 44, grid);
  const double qobb = obb(narrow, nlevel_model(2), 200, grid).value;
  CHECK(b.empirical_mle >= qobb - 3 * b.standard_error);
  CHECK(b.empirical_mle <= 1.10 * qobb + 3 * b.standard_error);
}

TEST_CASE("the posterior-mean-of-log estimator beats both competitors") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 2049);
  const SpinGasLikelihood lik{10, 1.0};
  for (long long v : {1LL, 5LL}) {
    const double e_log =
        empirical_mle(lik, prior, v, 3000, 99, grid, EstimatorKind::PosteriorMeanLog).empirical_mle;
    const double e_mean =
        empirical_mle(lik, prior, v, 3000, 99, grid, EstimatorKind::PosteriorMeanTheta)
            .empirical_mle;
    const double e_ml =
        empirical_mle(lik, prior, v, 3000, 99, grid, EstimatorKind::MaximumLikelihood)
            .empirical_mle;
    CHECK(e_log <= e_mean);
    CHECK(e_log <= e_ml);
  }
}

TEST_CASE("batches are deterministic and schedule-independent") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 513);
  const SpinGasLikelihood lik{10, 1.0};
  const TrialBatch a = empirical_mle(lik, prior, 3, 100, 7, grid);
  const TrialBatch b = empirical_mle(lik, prior, 3, 100, 7, grid);
  CHECK(a.empirical_mle == b.empirical_mle);
  CHECK(a.standard_error == b.standard_error);

  // a single trial recomputed standalone from (seed, index) matches the batch
  const TrialBatch rec =
      empirical_mle(lik, prior, 3, 100, 7, grid, EstimatorKind::PosteriorMeanLog, true);
  REQUIRE(rec.records.size() == 100);
  const PosteriorGridCache cache = make_posterior_cache(lik, prior, grid);
  for (std::size_t t : {std::size_t(0), std::size_t(41), std::size_t(99)}) {
    std::mt19937_64 rng = trial_rng(7, t);
    const double theta = sample_true_temperature(prior, rng);
    const std::vector<long long> outcomes = simulate_measurements(lik, theta, 3, rng);
    CHECK(theta == rec.records[t].theta_true);
    CHECK(outcomes == rec.records[t].outcomes);
    const double est = estimate_from_cache(cache, lik.sufficient_statistic(outcomes), 3,
                                           EstimatorKind::PosteriorMeanLog);
    CHECK(est == rec.records[t].estimate);
  }

  // standard error definition: sample stddev of squared log errors / sqrt(trials)
  double sum = 0, sum_sq = 0;
  for (const TrialRecord& r : rec.records) {
    const double e = std::log(r.estimate) - std::log(r.theta_true);
    sum += e * e;
    sum_sq += e * e * e * e;
  }
  const double var = (sum_sq - sum * sum / 100.0) / 99.0;
  CHECK(rel_err(rec.standard_error, std::sqrt(var / 100.0)) < 1e-12);
  CHECK(rel_err(rec.empirical_mle, sum / 100.0) < 1e-12);
}

TEST_CASE("batch preconditions") {
  const Prior prior = log_uniform_prior(0.1, 10.0);
  const TemperatureGrid grid = make_grid(0.1, 10.0, 257);
  const SpinGasLikelihood lik{10, 1.0};
  CHECK_THROWS_AS(empirical_mle(lik, prior, 3, 99, 7, grid), std::domain_error);
  CHECK_THROWS_AS(empirical_mle(lik, prior, 0, 100, 7, grid), std::domain_error);
}
