#include "epinp/simulate.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace epinp {

EpidemicEvents simulate_continuous(int population, const RateFunction& beta,
                                   double gamma, std::uint64_t seed,
                                   double initial_time) {
  if (population < 1) throw ConfigError("population must be at least 1");
  if (!(gamma > 0)) throw ConfigError("removal rate must be positive");
  const double beta_star = beta.sup();
  if (!std::isfinite(beta_star) || beta_star < 0)
    throw ConfigError("infection rate must be bounded and non-negative");

  Rng rng(seed, 0x51e);
  std::vector<Event> events;
  events.push_back({initial_time, EventKind::Infection, kNoIndividual});

  double t = initial_time;
  int x = population - 1;
  int y = 1;
  const double inf = std::numeric_limits<double>::infinity();
  while (y > 0) {
    double tau_r = rng.exponential(gamma * static_cast<double>(y));
    // First retained point of the thinned bounding process; candidates
    // beyond t + tau_r are irrelevant because the removal happens first.
    double tau_i = inf;
    double bound_rate = beta_star * static_cast<double>(x) * y;
    if (bound_rate > 0) {
      double s = t;
      for (;;) {
        s += rng.exponential(bound_rate);
        if (s - t >= tau_r) break;
        double u = rng.uniform();
        if (u <= beta(s) / beta_star) {
          tau_i = s - t;
          break;
        }
      }
    }
    if (tau_i < tau_r) {
      t += tau_i;
      events.push_back({t, EventKind::Infection, kNoIndividual});
      --x;
      ++y;
    } else {
      t += tau_r;
      events.push_back({t, EventKind::Removal, kNoIndividual});
      --y;
    }
  }
  return EpidemicEvents(std::move(events), population, TimeScale::Continuous);
}

EpidemicEvents simulate_discrete(int population, const RateFunction& beta,
                                 const InfectiousPeriodModel& period,
                                 std::uint64_t seed, int initial_day,
                                 int max_days) {
  if (population < 1) throw ConfigError("population must be at least 1");
  if (period.scale() != TimeScale::Discrete)
    throw ConfigError("discrete simulation needs a discrete period model");

  Rng rng(seed, 0xd15c);
  struct Case {
    int infected;
    int removed;
  };
  std::vector<Case> cases;
  auto infect = [&](int day) {
    int k = static_cast<int>(period.sample(rng));
    cases.push_back({day, day + k});
  };
  infect(initial_day);

  int x = population - 1;
  for (int t = initial_day; t < initial_day + max_days; ++t) {
    int y = 0;
    for (const Case& c : cases)
      if (c.infected <= t && t < c.removed) ++y;
    if (y == 0) break;
    double p = 1.0 - std::exp(-beta(static_cast<double>(t)) * y);
    int infections = 0;
    for (int s = 0; s < x; ++s)
      if (rng.uniform() < p) ++infections;
    for (int s = 0; s < infections; ++s) infect(t + 1);
    x -= infections;
  }

  // Labels 1..n follow removal order (ties broken by infection day).
  std::sort(cases.begin(), cases.end(), [](const Case& a, const Case& b) {
    if (a.removed != b.removed) return a.removed < b.removed;
    return a.infected < b.infected;
  });
  std::vector<Event> events;
  for (std::size_t j = 0; j < cases.size(); ++j) {
    int label = static_cast<int>(j) + 1;
    events.push_back({static_cast<double>(cases[j].infected),
                      EventKind::Infection, label});
    events.push_back({static_cast<double>(cases[j].removed),
                      EventKind::Removal, label});
  }
  return EpidemicEvents(std::move(events), population, TimeScale::Discrete);
}

Eigen::VectorXd final_size_distribution(int population, double beta,
                                        double gamma) {
  if (population < 1) throw ConfigError("population must be at least 1");
  if (population > 10)
    throw UsageError("final_size_distribution enumerates the chain and is "
                     "limited to population <= 10");
  if (!(beta >= 0) || !(gamma > 0))
    throw ConfigError("need beta >= 0 and gamma > 0");

  const int n = population;
  Eigen::VectorXd prob = Eigen::VectorXd::Zero(n + 1);
  // Absorption probabilities of the chain with rates beta*x*y (infection)
  // and gamma*y (removal), walked over the finite (x, y) lattice in order of
  // decreasing x: every transition lowers x or y.
  Eigen::MatrixXd reach = Eigen::MatrixXd::Zero(n + 1, n + 1);
  reach(n - 1, 1) = 1.0;  // start: one infective
  for (int x = n - 1; x >= 0; --x) {
    for (int y = n - x; y >= 1; --y) {
      double mass = reach(x, y);
      if (mass == 0.0) continue;
      double rate_inf = beta * x * y;
      double rate_rem = gamma * y;
      double p_inf = rate_inf / (rate_inf + rate_rem);
      if (x > 0 && p_inf > 0) reach(x - 1, y + 1) += mass * p_inf;
      if (y == 1)
        prob(n - x) += mass * (1.0 - p_inf);  // absorbed with final size n-x
      else
        reach(x, y - 1) += mass * (1.0 - p_inf);
    }
  }
  return prob;
}

}  // namespace epinp
