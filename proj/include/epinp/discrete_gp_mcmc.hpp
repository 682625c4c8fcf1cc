#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "epinp/chain_output.hpp"
#include "epinp/events.hpp"
#include "epinp/gp.hpp"
#include "epinp/rng.hpp"

namespace epinp {

// Beta(a, b) prior on the geometric infectious-period parameter gamma.
struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
};

// log(1 - exp(-x)) for x > 0, stable near both ends; -inf for x <= 0.
inline double log1mexp(double x) {
  if (!(x > 0)) return -std::numeric_limits<double>::infinity();
  return x > 0.6931471805599453 ? std::log1p(-std::exp(-x))
                                : std::log(-std::expm1(-x));
}

// The likelihood kernel h of the discrete model (the part of the augmented
// likelihood that depends on the infection times and beta through the daily
// counts; infectious-period factors excluded):
//   prod_{j != kappa} (1 - exp(-beta(i_j - 1) Y(i_j - 1)))
//     * exp(-sum_{t = i_kappa}^{r_n - 1} beta(t) Y(t) X(t + 1)).
// Returns -inf for structurally impossible states (a non-unique earliest
// infection, kappa not the earliest, any r_j <= i_j, or an infection on a
// day with no infective present).
double discrete_log_h(const std::vector<int>& infection_days, int kappa,
                      const std::vector<int>& removal_days, int population,
                      const std::function<double(int)>& beta);

// Full augmented log-likelihood: log h plus the geometric infectious-period
// log-pmf terms gamma (1-gamma)^{k-1}.
double discrete_augmented_loglik(const std::vector<int>& infection_days,
                                 int kappa,
                                 const std::vector<int>& removal_days,
                                 int population,
                                 const std::function<double(int)>& beta,
                                 double gamma);

// Conjugate full conditional for gamma: Beta(n + a, sum(r_j - i_j) - n + b).
double gibbs_gamma_discrete(int n, long long period_sum,
                            const BetaPrior& prior, Rng& rng);

// Binomial maximum-likelihood estimate of beta(t) per day from a fully
// observed discrete epidemic: beta_hat(t) = -ln(1 - c_t / X(t)) / Y(t) where
// c_t is the number of new infections at day t+1.  Days with no susceptible
// or no infective yield no estimate; c_t = X(t) saturates to +inf.
struct DailyMlEstimate {
  int day = 0;
  double beta_hat = 0.0;
  bool saturated = false;
};
std::vector<DailyMlEstimate> ml_daily_estimates(const EpidemicEvents& events);

// Data-augmented sampler for the discrete-time SIR model with a GP prior on
// log beta(t), observing removal days only.  One sweep draws gamma from its
// Beta full conditional, makes several geometric-proposal infection-time
// moves (with reversible grid extension/truncation when the initial
// infection moves), and one under-relaxed joint update of g.
//
// The escape exponent sum_t beta(t) Y(t) X(t+1) and the infection-product
// sum are maintained incrementally; check_caches() re-derives both from
// scratch.
class DiscreteGpSampler {
 public:
  DiscreteGpSampler(const RemovalData& data, const BetaPrior& prior,
                    const KernelParams& kernel, const McmcOptions& options,
                    const std::optional<std::vector<int>>& known_infections =
                        std::nullopt);

  void sweep(Rng& rng);
  void step_gamma(Rng& rng);
  bool step_infection_move(Rng& rng);
  bool step_g_update(Rng& rng);

  const std::vector<int>& infection_days() const { return i_; }
  const std::vector<int>& removal_days() const { return r_; }
  int population() const { return population_; }
  int kappa() const { return kappa_; }  // 0-based label index
  double gamma() const { return gamma_; }
  const GpField& field() const { return field_; }
  int day_min() const { return i_[static_cast<std::size_t>(kappa_)]; }
  int floor_day() const { return floor_day_; }
  double beta_at(int day) const;
  long long period_sum() const { return period_sum_; }

  double log_h() const { return sum_inf_ - sum_exp_; }
  double log_h_scratch() const;
  void check_caches(double tol = 1e-10) const;

  void set_gamma(double g) { gamma_ = g; }

  std::int64_t proposed(const char* move) const;
  std::int64_t accepted(const char* move) const;
  std::int64_t floor_rejects() const { return floor_rejects_; }

 private:
  // data and configuration
  std::vector<int> r_;
  int n_ = 0;
  int population_ = 0;
  BetaPrior prior_;
  KernelParams kernel_;
  McmcOptions options_;
  int floor_day_ = 0;
  int last_day_ = 0;

  // latent state
  std::vector<int> i_;
  int kappa_ = 0;
  double gamma_ = 0.5;
  GpField field_;  // grid = integer days i_kappa .. r_n - 1

  // daily counts over [floor_day_, last_day_] and incremental caches
  std::vector<int> x_, y_;
  std::vector<std::vector<int>> infs_at_day_;
  double sum_exp_ = 0.0;
  double sum_inf_ = 0.0;
  long long period_sum_ = 0;

  // counters
  std::int64_t inf_proposed_ = 0, inf_accepted_ = 0;
  std::int64_t g_proposed_ = 0, g_accepted_ = 0;
  std::int64_t floor_rejects_ = 0;
  bool floor_warned_ = false;

  int idx(int day) const { return day - floor_day_; }
  double field_value(int day) const {
    return field_.values()[day - day_min()];
  }
  void rebuild_counts_and_caches();
  std::pair<double, double> sums_for_values(const Eigen::VectorXd& values) const;
  bool slow_path_move(std::size_t j, int proposed_day, Rng& rng);

  friend ChainOutput run_discrete_gp_mcmc(const RemovalData&,
                                          const BetaPrior&,
                                          const KernelParams&,
                                          const McmcOptions&,
                                          const std::optional<std::vector<int>>&);
};

ChainOutput run_discrete_gp_mcmc(
    const RemovalData& data, const BetaPrior& prior,
    const KernelParams& kernel, const McmcOptions& options,
    const std::optional<std::vector<int>>& known_infections = std::nullopt);

}  // namespace epinp
