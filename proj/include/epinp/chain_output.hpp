#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace epinp {

// Shared MCMC run options.  Samplers ignore the knobs that do not apply to
// them.  no_data replaces the likelihood by 1 (prior reproduction runs);
// check_every > 0 re-derives incrementally maintained quantities from
// scratch every that many sweeps and fails loudly on disagreement.
struct McmcOptions {
  int iterations = 10000;
  int burnin = -1;           // -1: 20% of iterations
  int thin = 10;
  std::uint64_t seed = 1;
  int moves_per_sweep = 0;   // 0: one per latent infection time
  int g_updates_per_sweep = 1;
  int chains = 1;
  double epsilon = 0.2;      // under-relaxed GP proposal tuning
  bool no_data = false;
  bool fix_infection_times = false;
  bool fix_beta_star = false;
  bool fix_g = false;      // freeze g at zero (test harness)
  bool fix_gamma = false;  // skip gamma updates (test harness)
  int check_every = 0;
  double floor_multiplier = 100.0;  // i_kappa floor, in prior mean periods

  int resolved_burnin() const {
    return burnin >= 0 ? burnin : iterations / 5;
  }
};

// Posterior samples from one or more chains: scalar parameter traces plus a
// per-time-point trace of beta(t).  Days absent from an iteration's grid are
// recorded as NaN, never imputed.
struct ChainOutput {
  std::vector<std::string> scalar_names;
  Eigen::MatrixXd scalars;  // retained iterations x scalar_names
  Eigen::VectorXd days;     // beta reporting grid; may be empty
  Eigen::MatrixXd beta;     // retained iterations x days, NaN = missing
  std::map<std::string, double> acceptance;
  std::map<std::string, std::int64_t> counters;
  std::uint64_t seed = 0;
  int iterations = 0;
  int burnin = 0;
  int thin = 1;
  int chains = 1;
  double wall_seconds = 0.0;

  Eigen::Index retained() const { return scalars.rows(); }
  Eigen::VectorXd scalar_trace(const std::string& name) const;
};

// Row-concatenates chains run with independent seeds; the day grids are
// unioned with missing entries padded as NaN.  Associative.
ChainOutput merge_chains(const std::vector<ChainOutput>& chains);

struct PosteriorSummary {
  struct ScalarStats {
    double median = 0, mean = 0, lo = 0, hi = 0, ess = 0;
  };

  double level = 0.95;
  Eigen::VectorXd days;
  Eigen::VectorXd median, mean, lo, hi, ess;
  Eigen::VectorXi n_present;  // non-missing samples per day
  std::map<std::string, ScalarStats> scalars;
};

// Pointwise empirical quantiles of beta(t) with missing samples excluded per
// day; days with no samples at all are dropped from the summary.
PosteriorSummary summarize(const ChainOutput& chain, double level = 0.95);

// Empirical quantile with linear interpolation between order statistics
// (R type 7).
double quantile(std::vector<double> values, double p);

// Effective sample size via the initial monotone positive-sequence
// autocorrelation sum.
double effective_sample_size(const Eigen::VectorXd& trace);

}  // namespace epinp
