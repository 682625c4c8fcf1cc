#pragma once

#include <vector>

#include "epinp/chain_output.hpp"
#include "epinp/events.hpp"
#include "epinp/rng.hpp"
#include "epinp/trajectory.hpp"

namespace epinp {

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct ParametricPriors {
  GammaPrior beta;
  GammaPrior gamma;
  double init_gap_rate = 1.0;  // exponential prior rate on r_1 - i_1
};

// Latent state of the constant-rate continuous-time sampler: the initial
// infection time, the remaining infection times as a sorted multiset, and
// the current rates.
struct ParametricState {
  double i1 = 0.0;
  std::vector<double> infections;  // i_2..i_n, sorted
  double beta = 1.0;
  double gamma = 1.0;
};

// log of the augmented likelihood of infection and removal times for the
// constant-rate SIR model:
//   prod_j beta X(i_j-) Y(i_j-) * prod_j gamma Y(r_j-)
//     * exp(-int_{i1}^{r_n} beta X Y + gamma Y dt),
// -inf whenever a factor vanishes or the trajectory is impossible.
double sir_augmented_loglik(double i1, const std::vector<double>& infections,
                            const std::vector<double>& removals,
                            int population, double beta, double gamma);

// Gamma-conjugate full-conditional draws given the latent times.
double gibbs_beta(const SirPath& path, const GammaPrior& prior, Rng& rng);
double gibbs_gamma(const SirPath& path, const GammaPrior& prior, Rng& rng);

// Exact full-conditional draw of i1 on (-inf, upper): upper - i1 is
// exponential with rate beta (N - 1) + gamma + rho.  upper is the first
// subsequent constraint (next infection, first removal, first thinned point).
double draw_initial_time(double upper, double rate_out_of_i1,
                         double init_gap_rate, Rng& rng);

// One Metropolis move of a uniformly chosen infection time, proposed
// uniformly on (i1, r_n) (symmetric on the sorted multiset).  Returns true
// on acceptance and updates state in place.
bool move_infection_time(ParametricState& state,
                         const std::vector<double>& removals, int population,
                         Rng& rng, bool no_data = false);

ChainOutput run_parametric_mcmc(const RemovalData& data,
                                const ParametricPriors& priors,
                                const McmcOptions& options);

}  // namespace epinp
