#pragma once

#include <utility>
#include <vector>

#include "epinp/events.hpp"

namespace epinp {

// Piecewise-constant (X, Y) path implied by an initial infection at i1,
// further infection times, and removal times, for a completed continuous-time
// epidemic.  Exposes the exact event-interval integrals that the likelihoods
// need; no quadrature anywhere.
//
// valid() is false when the configuration is impossible (an infection with
// no susceptible or no infective present, a removal with no infective, tied
// times, or an epidemic that does not terminate exactly at the last removal).
class SirPath {
 public:
  SirPath(double i1, std::vector<double> infections,
          std::vector<double> removals, int population);

  bool valid() const { return valid_; }
  double start() const { return start_; }
  double end_time() const { return end_; }
  int population() const { return population_; }

  double integral_xy() const { return int_xy_; }   // over [i1, r_n]
  double integral_y() const { return int_y_; }
  double measure_xy_positive() const { return measure_xy_; }

  // Left limits (X(t-), Y(t-)) for t in [i1, r_n].
  std::pair<int, int> counts_left(double t) const;

  // Time u of the way through {t : X(t) Y(t) >= 1}, u in (0, 1).
  double position_in_xy_positive(double u) const;

  struct PathEvent {
    double time;
    EventKind kind;
    int x_left;
    int y_left;
  };
  // All events after the initial infection, in time order, with left-limit
  // counts attached; empty when the path is invalid.
  const std::vector<PathEvent>& events() const { return events_; }

 private:
  int population_ = 0;
  bool valid_ = false;
  double start_ = 0.0;
  double end_ = 0.0;
  double int_xy_ = 0.0;
  double int_y_ = 0.0;
  double measure_xy_ = 0.0;
  std::vector<PathEvent> events_;
  std::vector<double> seg_times_;  // segment boundaries, size segments + 1
  std::vector<int> seg_x_, seg_y_;
};

}  // namespace epinp
