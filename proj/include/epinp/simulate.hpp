#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "epinp/events.hpp"
#include "epinp/infectious_period.hpp"
#include "epinp/rate_function.hpp"

namespace epinp {

// Exact continuous-time SIR simulation with a (possibly time-varying)
// infection rate, by thinning a bounding process of rate beta* X Y: after
// each event, tau_R ~ Exponential(gamma Y) competes against the first
// retained point of a rate-beta* X Y Poisson process thinned with retention
// probability beta(s)/beta*.  Reduces to Gillespie when beta is constant.
// Events are label-free; the epidemic starts with one infective at
// initial_time and runs until no infectives remain.
EpidemicEvents simulate_continuous(int population, const RateFunction& beta,
                                   double gamma, std::uint64_t seed,
                                   double initial_time = 0.0);

// Discrete-time SIR simulation: at each day t every current susceptible
// independently escapes infection with probability exp(-beta(t) Y(t));
// failures become infective at day t+1.  Infectious periods are drawn at the
// moment of infection.  Individuals are labeled 1..n by removal order.
EpidemicEvents simulate_discrete(int population, const RateFunction& beta,
                                 const InfectiousPeriodModel& period,
                                 std::uint64_t seed, int initial_day = 0,
                                 int max_days = 100000);

// Exact final-size distribution of the constant-rate continuous-time SIR
// Markov chain, by enumerating the absorbing bivariate chain.  Entry s of the
// result is P(final size == s), s = 0..N; the possible sizes are 1..N.
// Desk-scale oracle: refuses population > 10.
Eigen::VectorXd final_size_distribution(int population, double beta,
                                        double gamma);

}  // namespace epinp
