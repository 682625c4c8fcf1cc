#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "epinp/parametric_mcmc.hpp"
#include "epinp/simulate.hpp"
#include "support/oracles.hpp"
#include "support/stats.hpp"

using namespace epinp;

namespace {
const std::vector<double> kInf = {1.0};   // i_2
const std::vector<double> kRem = {2.0, 3.0};
}  // namespace

TEST_CASE("worked two-person likelihood equals 2 e^-5") {
  double ll = sir_augmented_loglik(0.0, kInf, kRem, 2, 1.0, 1.0);
  CHECK(std::exp(ll) == doctest::Approx(2.0 * std::exp(-5.0)).epsilon(1e-12));
}

TEST_CASE("an infection while no infective is present is impossible") {
  // second infection after the only infective was removed
  double ll = sir_augmented_loglik(0.0, {2.5}, kRem, 3, 1.0, 1.0);
  CHECK(ll == -std::numeric_limits<double>::infinity());
}

TEST_CASE("discretized-probability oracle agrees with the closed form") {
  double exact = sir_augmented_loglik(0.0, kInf, kRem, 2, 1.0, 1.0);
  double approx = testoracle::discretized_parametric_loglik(
      0.0, kInf, kRem, 2, 1.0, 1.0, 1e-5);
  CHECK(std::abs(std::exp(approx) / std::exp(exact) - 1.0) < 1e-3);

  double exact2 = sir_augmented_loglik(-0.4, {0.3, 0.9}, {1.1, 2.0, 2.7}, 5,
                                       0.4, 0.9);
  double approx2 = testoracle::discretized_parametric_loglik(
      -0.4, {0.3, 0.9}, {1.1, 2.0, 2.7}, 5, 0.4, 0.9, 1e-5);
  CHECK(std::abs(std::exp(approx2) / std::exp(exact2) - 1.0) < 1e-3);
}

TEST_CASE("path integrals agree with midpoint quadrature") {
  SirPath path(0.0, {0.3, 0.9}, {1.1, 2.0, 2.7}, 5);
  REQUIRE(path.valid());
  auto [xy, y] = testoracle::quadrature_integrals(path, 1e-4);
  CHECK(std::abs(xy - path.integral_xy()) < 1e-6 * std::abs(xy));
  CHECK(std::abs(y - path.integral_y()) < 1e-6 * std::abs(y));
}

TEST_CASE("gamma full conditional on the worked example is Gamma(3, 5)") {
  SirPath path(0.0, kInf, kRem, 2);
  REQUIRE(path.valid());
  CHECK(path.integral_y() == doctest::Approx(4.0));
  CHECK(path.integral_xy() == doctest::Approx(1.0));
  GammaPrior prior{1.0, 1.0};
  Rng rng(2);
  std::vector<double> draws(100000);
  for (double& d : draws) d = gibbs_gamma(path, prior, rng);
  CHECK(teststat::mean_z_score(draws, 3.0 / 5.0) < 3.0);
  CHECK(teststat::variance_z_score(draws, 3.0 / 25.0) < 3.5);
  CHECK(teststat::ks_p_value(draws, [](double x) {
          return teststat::gamma_cdf(x, 3.0, 5.0);
        }) > 0.01);
}

TEST_CASE("beta full conditional with no further infections keeps its prior shape") {
  // n = 1: only the initial infection, no beta factors
  SirPath path(0.0, {}, {1.5}, 4);
  REQUIRE(path.valid());
  GammaPrior prior{2.0, 3.0};
  Rng rng(3);
  std::vector<double> draws(100000);
  for (double& d : draws) d = gibbs_beta(path, prior, rng);
  double rate = 3.0 + path.integral_xy();
  CHECK(teststat::mean_z_score(draws, 2.0 / rate) < 3.0);
  CHECK(teststat::ks_p_value(draws, [&](double x) {
          return teststat::gamma_cdf(x, 2.0, rate);
        }) > 0.01);
}

TEST_CASE("initial-time draw: support, gridded-density oracle, degeneracy") {
  const double beta = 1.0, gamma = 1.0, rho = 0.7;
  const int population = 2;
  const double upper = std::min(kInf[0], kRem[0]);
  const double rate_out = beta * (population - 1) + gamma;

  Rng rng(5);
  std::vector<double> draws(100000);
  for (double& d : draws) {
    d = draw_initial_time(upper, rate_out, rho, rng);
    REQUIRE(d < upper);
  }

  // Gridded unnormalized density over (upper - span, upper): the likelihood
  // evaluated at each i1 times the exponential prior on r_1 - i_1.
  const double span = 30.0 / (rate_out + rho);
  const int cells = static_cast<int>(span / 1e-3);
  std::vector<double> density(cells);
  for (int k = 0; k < cells; ++k) {
    double i1 = upper - span + (k + 0.5) * span / cells;
    double ll = sir_augmented_loglik(i1, kInf, kRem, population, beta, gamma);
    density[static_cast<std::size_t>(k)] =
        std::exp(ll - rho * (kRem[0] - i1));
  }
  double total = 0;
  for (double d : density) total += d;
  std::vector<double> cdf(cells);
  double acc = 0;
  for (int k = 0; k < cells; ++k) {
    acc += density[static_cast<std::size_t>(k)] / total;
    cdf[static_cast<std::size_t>(k)] = acc;
  }
  auto grid_cdf = [&](double x) {
    if (x <= upper - span) return 0.0;
    if (x >= upper) return 1.0;
    double pos = (x - (upper - span)) / (span / cells);
    int idx = std::min(cells - 1, static_cast<int>(pos));
    return cdf[static_cast<std::size_t>(idx)];
  };
  std::sort(draws.begin(), draws.end());
  double d_stat = 0;
  for (std::size_t k = 0; k < draws.size(); ++k) {
    double f = grid_cdf(draws[k]);
    d_stat = std::max(d_stat, std::abs(f - k / 1e5));
    d_stat = std::max(d_stat, std::abs((k + 1) / 1e5 - f));
  }
  CHECK(d_stat < 0.01);

  // huge prior rate pins i1 just below its bound
  Rng rng2(6);
  double mean_gap = 0;
  for (int k = 0; k < 1000; ++k)
    mean_gap += upper - draw_initial_time(upper, rate_out, 1e7, rng2);
  CHECK(mean_gap / 1000 < 1e-5);
}

TEST_CASE("infection-time move leaves the gridded target invariant") {
  // N=3, removals at 2 and 3, i1 pinned at 0, beta = gamma = 1: the free
  // latent time i2 lives on (0, 2) with density proportional to exp(i2).
  const std::vector<double> removals = {2.0, 3.0};
  const int cells = 20;
  std::vector<double> probs(cells);
  double total = 0;
  for (int c = 0; c < cells; ++c) {
    // exact cell mass of exp(x) on (0, 2)
    double a = 2.0 * c / cells, b = 2.0 * (c + 1) / cells;
    probs[static_cast<std::size_t>(c)] = std::exp(b) - std::exp(a);
    total += probs[static_cast<std::size_t>(c)];
  }
  for (double& p : probs) p /= total;

  // thin by 20 moves so the recorded states are near-independent
  std::vector<double> counts(cells, 0.0);
  ParametricState state;
  state.i1 = 0.0;
  state.infections = {1.0};
  state.beta = 1.0;
  state.gamma = 1.0;
  Rng rng(8);
  int accepted = 0;
  const int kept = 40000;
  for (int k = 0; k < kept; ++k) {
    for (int j = 0; j < 20; ++j)
      if (move_infection_time(state, removals, 3, rng)) ++accepted;
    int cell = static_cast<int>(state.infections[0] / (2.0 / cells));
    counts[static_cast<std::size_t>(std::min(cell, cells - 1))] += 1.0;
  }
  CHECK(accepted > kept);
  CHECK(teststat::chi_square_gof_p(counts, probs, kept) > 0.01);
}

TEST_CASE("simulated-data recovery: posterior near the truth") {
  const int population = 200;
  const double beta_true = 0.002, gamma_true = 0.5;
  std::optional<EpidemicEvents> epi;
  std::uint64_t chosen = 0;
  for (std::uint64_t seed = 1; seed <= 60 && !epi.has_value(); ++seed) {
    EpidemicEvents trial = simulate_continuous(
        population, RateFunction::constant(beta_true), gamma_true, seed);
    if (trial.final_size() >= 12) {
      epi = trial;
      chosen = seed;
    }
  }
  REQUIRE(epi.has_value());
  INFO("seed ", chosen, " final size ", epi->final_size());

  RemovalData data = make_removal_data(epi->removal_times(), population,
                                       TimeScale::Continuous);
  ParametricPriors priors;
  priors.beta = {1.0, 1.0};
  priors.gamma = {1.0, 1.0};
  priors.init_gap_rate = gamma_true;
  McmcOptions opts;
  opts.iterations = 20000;
  opts.burnin = 4000;
  opts.thin = 10;
  opts.seed = 99;
  ChainOutput chain = run_parametric_mcmc(data, priors, opts);

  Eigen::VectorXd beta_trace = chain.scalar_trace("beta");
  Eigen::VectorXd gamma_trace = chain.scalar_trace("gamma");
  auto within = [](const Eigen::VectorXd& trace, double truth) {
    double mean = trace.mean();
    double sd = std::sqrt((trace.array() - mean).square().sum() /
                          (trace.size() - 1.0));
    return std::abs(mean - truth) < 3.0 * sd;
  };
  CHECK(within(beta_trace, beta_true));
  CHECK(within(gamma_trace, gamma_true));
}

TEST_CASE("no-data mode reproduces the gamma priors") {
  RemovalData data =
      make_removal_data({1.0, 2.0, 3.5}, 30, TimeScale::Continuous);
  ParametricPriors priors;
  priors.beta = {2.0, 5.0};
  priors.gamma = {3.0, 2.0};
  priors.init_gap_rate = 1.0;
  McmcOptions opts;
  opts.iterations = 30000;
  opts.burnin = 1000;
  opts.thin = 3;
  opts.seed = 21;
  opts.no_data = true;
  ChainOutput chain = run_parametric_mcmc(data, priors, opts);
  Eigen::VectorXd beta_trace = chain.scalar_trace("beta");
  Eigen::VectorXd gamma_trace = chain.scalar_trace("gamma");
  std::vector<double> b(beta_trace.data(), beta_trace.data() + beta_trace.size());
  std::vector<double> g(gamma_trace.data(),
                        gamma_trace.data() + gamma_trace.size());
  CHECK(teststat::ks_p_value(b, [](double x) {
          return teststat::gamma_cdf(x, 2.0, 5.0);
        }) > 0.01);
  CHECK(teststat::ks_p_value(g, [](double x) {
          return teststat::gamma_cdf(x, 3.0, 2.0);
        }) > 0.01);
}

TEST_CASE("fixed seed gives a bit-identical chain") {
  RemovalData data =
      make_removal_data({1.0, 1.7, 2.1, 4.0}, 50, TimeScale::Continuous);
  ParametricPriors priors;
  McmcOptions opts;
  opts.iterations = 500;
  opts.burnin = 100;
  opts.thin = 2;
  opts.seed = 31;
  ChainOutput a = run_parametric_mcmc(data, priors, opts);
  ChainOutput b = run_parametric_mcmc(data, priors, opts);
  CHECK(a.scalars == b.scalars);
}

TEST_CASE("accepted states always satisfy the state invariants") {
  RemovalData data =
      make_removal_data({1.0, 1.4, 2.8, 3.1, 5.0}, 40, TimeScale::Continuous);
  ParametricPriors priors;
  McmcOptions opts;
  opts.iterations = 2000;
  opts.burnin = 100;
  opts.thin = 1;
  opts.seed = 77;
  opts.check_every = 1;  // asserts a finite likelihood every sweep
  ChainOutput chain = run_parametric_mcmc(data, priors, opts);
  Eigen::VectorXd i1 = chain.scalar_trace("i1");
  CHECK((i1.array() < data.times[0]).all());
}
