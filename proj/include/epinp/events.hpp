#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "epinp/errors.hpp"

namespace epinp {

enum class TimeScale { Continuous, Discrete };

enum class EventKind { Infection, Removal };

inline constexpr int kNoIndividual = -1;

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Infection;
  int individual = kNoIndividual;  // 1-based label, or kNoIndividual
};

// A full epidemic trajectory: the time-ordered infection/removal record from
// which the counting processes X(t) (susceptibles) and Y(t) (infectives) are
// derived.  Validated on construction:
//   * event times non-decreasing (strictly increasing in continuous time),
//   * 0 <= X(t), 0 <= Y(t), X(t) + Y(t) <= N throughout,
//   * infections need a susceptible and (beyond the initial one) an
//     infective present; removals need an infective present,
//   * removals never outnumber infections on any prefix.
class EpidemicEvents {
 public:
  EpidemicEvents(std::vector<Event> events, int population, TimeScale scale);

  const std::vector<Event>& events() const { return events_; }
  int population() const { return population_; }
  TimeScale scale() const { return scale_; }
  double initial_time() const { return initial_time_; }

  // (X(t), Y(t)), right-continuous.  Throws DataError for t < initial_time.
  std::pair<int, int> counts(double t) const;
  // Left limits (X(t-), Y(t-)).
  std::pair<int, int> counts_left(double t) const;

  int final_size() const { return static_cast<int>(infection_times_.size()); }
  const std::vector<double>& infection_times() const { return infection_times_; }
  const std::vector<double>& removal_times() const { return removal_times_; }

  // CSV with header "time,kind,individual", kind in {I, R}.
  void write_csv(std::ostream& os) const;
  static EpidemicEvents read_csv(std::istream& is, int population,
                                 TimeScale scale);

 private:
  std::vector<Event> events_;           // sorted by (time, kind)
  std::vector<double> infection_times_; // sorted
  std::vector<double> removal_times_;   // sorted
  int population_ = 0;
  TimeScale scale_ = TimeScale::Continuous;
  double initial_time_ = 0.0;

  void validate() const;
};

// Observed data: sorted removal times and the population size.
struct RemovalData {
  std::vector<double> times;  // sorted; strictly increasing when continuous
  int population = 0;
  TimeScale scale = TimeScale::Continuous;

  int count() const { return static_cast<int>(times.size()); }
};

// Validates and canonicalizes raw removal times.  In continuous time exact
// ties are perturbed upward in steps of tie_epsilon; if the perturbed run
// would reach the next distinct time the data are rejected.
RemovalData make_removal_data(std::vector<double> times, int population,
                              TimeScale scale, double tie_epsilon = 1e-6);

}  // namespace epinp
