#pragma once

#include <Eigen/Dense>
#include <vector>

#include "epinp/chain_output.hpp"
#include "epinp/events.hpp"
#include "epinp/gp.hpp"
#include "epinp/parametric_mcmc.hpp"
#include "epinp/rng.hpp"
#include "epinp/trajectory.hpp"

namespace epinp {

struct CtsGpPriors {
  GammaPrior gamma;
  GammaPrior beta_star;
  double init_gap_rate = 1.0;
};

// Sigmoid factors shared by the thinning likelihoods:
//   sum log sigma(g at retained points) + sum log sigma(-g at thinned points).
// Swapping roles and negating g leaves the value unchanged.
double thinning_sigma_log_factors(const Eigen::VectorXd& g_retained,
                                  const Eigen::VectorXd& g_thinned);

// Augmented sigmoidal-Cox-process log-likelihood of K observed and M thinned
// points on [0, T] under a bounding rate lambda*:
//   (lambda*)^{M+K} exp(-lambda* T) prod sigma(g(s_k)) prod sigma(-g(s~_m)).
double sgcp_augmented_loglik(const Eigen::VectorXd& g_observed,
                             const Eigen::VectorXd& g_thinned,
                             double lambda_star, double t_end);

// Augmented log-likelihood of the continuous-time SIR model with
// beta(t) = beta* sigma(g(t)), thinned candidate points included:
// non-initial infections contribute beta* X Y sigma(g), thinned points
// beta* X Y sigma(-g), removals gamma Y, and the exponent integrates
// beta* X Y + gamma Y over [i1, r_n].  -inf for impossible configurations
// (including thinned points where X(t) Y(t) = 0).
double sir_thinned_augmented_loglik(
    double i1, const std::vector<double>& infections,
    const Eigen::VectorXd& g_infections, const std::vector<double>& thinned,
    const Eigen::VectorXd& g_thinned, const std::vector<double>& removals,
    int population, double beta_star, double gamma);

// Sampler for the continuous-time model: Gibbs draws for gamma and beta*,
// an exact full-conditional draw for i1, birth/death/move proposals for the
// thinned points (mix 0.25/0.25/0.5, locations uniform on {X Y >= 1},
// g values from the GP conditional), uniform infection-time moves with a
// joint conditional g draw, and an under-relaxed joint g update.
class CtsGpSampler {
 public:
  CtsGpSampler(const RemovalData& data, const CtsGpPriors& priors,
               const KernelParams& kernel, const McmcOptions& options);

  void sweep(Rng& rng);
  void step_gamma(Rng& rng);
  void step_beta_star(Rng& rng);
  void step_i1(Rng& rng);
  bool step_thinned(Rng& rng);
  bool step_infection_move(Rng& rng);
  bool step_g_update(Rng& rng);

  double i1() const { return i1_; }
  double gamma() const { return gamma_; }
  double beta_star() const { return beta_star_; }
  int thinned_count() const { return thinned_count_; }
  int population() const { return population_; }
  const std::vector<double>& removals() const { return r_; }
  const GpScatter& scatter() const { return scatter_; }
  const SirPath& path() const { return path_; }

  std::vector<double> infection_times() const;  // excluding i1
  std::vector<double> thinned_times() const;

  double current_loglik() const;
  // beta(t) = beta* sigma(E[g(t) | points]) on a reporting grid.
  Eigen::VectorXd beta_on_grid(const Eigen::VectorXd& grid) const;

  void set_gamma(double g) { gamma_ = g; }
  void set_beta_star(double b) { beta_star_ = b; }

  std::int64_t proposed(const char* move) const;
  std::int64_t accepted(const char* move) const;

 private:
  enum class Role { Infection, Thinned };

  std::vector<double> r_;
  int n_ = 0;
  int population_ = 0;
  CtsGpPriors priors_;
  KernelParams kernel_;
  McmcOptions options_;

  double i1_ = 0.0;
  double gamma_ = 1.0;
  double beta_star_ = 1.0;
  GpScatter scatter_;
  std::vector<Role> roles_;
  int thinned_count_ = 0;
  SirPath path_;

  std::int64_t thin_proposed_ = 0, thin_accepted_ = 0;
  std::int64_t inf_proposed_ = 0, inf_accepted_ = 0;
  std::int64_t g_proposed_ = 0, g_accepted_ = 0;

  void rebuild_path();
  Eigen::Index pick_role(Role role, Eigen::Index ordinal) const;
  double loglik_with(double i1, const std::vector<double>& inf,
                     const Eigen::VectorXd& g_inf,
                     const std::vector<double>& thin,
                     const Eigen::VectorXd& g_thin) const;
};

ChainOutput run_cts_gp_mcmc(const RemovalData& data, const CtsGpPriors& priors,
                            const KernelParams& kernel,
                            const McmcOptions& options);

}  // namespace epinp
