#include "epinp/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace epinp {

SirPath::SirPath(double i1, std::vector<double> infections,
                 std::vector<double> removals, int population)
    : population_(population), start_(i1) {
  if (population < 1) throw UsageError("SirPath: population must be >= 1");
  if (removals.empty()) return;  // nothing observed: treat as invalid
  std::sort(infections.begin(), infections.end());
  std::sort(removals.begin(), removals.end());
  end_ = removals.back();

  struct Ev {
    double t;
    EventKind kind;
  };
  std::vector<Ev> evs;
  evs.reserve(infections.size() + removals.size());
  for (double t : infections) evs.push_back({t, EventKind::Infection});
  for (double t : removals) evs.push_back({t, EventKind::Removal});
  std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.kind < b.kind;
  });

  int x = population - 1;
  int y = 1;
  if (x < 0) return;
  double prev = i1;
  seg_times_.push_back(i1);
  bool ok = true;
  for (const Ev& e : evs) {
    if (!(e.t > prev)) {  // ties (or an event at/before i1): undefined
      ok = false;
      break;
    }
    double len = e.t - prev;
    int_xy_ += len * x * y;
    int_y_ += len * y;
    if (x * y >= 1) measure_xy_ += len;
    seg_x_.push_back(x);
    seg_y_.push_back(y);
    seg_times_.push_back(e.t);
    events_.push_back({e.t, e.kind, x, y});
    if (e.kind == EventKind::Infection) {
      if (x < 1 || y < 1) {
        ok = false;
        break;
      }
      --x;
      ++y;
    } else {
      if (y < 1) {
        ok = false;
        break;
      }
      --y;
    }
    prev = e.t;
  }
  // Complete: the last removal empties the infectives.
  valid_ = ok && y == 0 && infections.size() + 1 == removals.size();
  if (!valid_) {
    events_.clear();
    seg_times_.clear();
    seg_x_.clear();
    seg_y_.clear();
    int_xy_ = int_y_ = measure_xy_ = 0.0;
  }
}

std::pair<int, int> SirPath::counts_left(double t) const {
  if (!valid_) throw UsageError("counts_left on an invalid path");
  if (t < start_ || t > end_)
    throw UsageError("counts_left outside [i1, r_n]");
  if (t == start_) return {population_, 0};
  auto it = std::lower_bound(seg_times_.begin(), seg_times_.end(), t);
  std::size_t idx = static_cast<std::size_t>(it - seg_times_.begin());
  // t lies in (seg_times_[idx-1], seg_times_[idx]]; segment idx-1 holds the
  // left-limit counts.
  return {seg_x_[idx - 1], seg_y_[idx - 1]};
}

double SirPath::position_in_xy_positive(double u) const {
  if (!valid_) throw UsageError("position_in_xy_positive on an invalid path");
  if (!(u > 0.0) || !(u < 1.0) || measure_xy_ <= 0.0)
    throw UsageError("position_in_xy_positive needs u in (0,1) and a "
                     "non-empty region");
  double target = u * measure_xy_;
  for (std::size_t k = 0; k < seg_x_.size(); ++k) {
    if (seg_x_[k] * seg_y_[k] < 1) continue;
    double len = seg_times_[k + 1] - seg_times_[k];
    if (target <= len) return seg_times_[k] + target;
    target -= len;
  }
  return seg_times_.back();  // unreachable for u < 1 up to round-off
}

}  // namespace epinp
