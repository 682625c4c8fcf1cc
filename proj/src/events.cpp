#include "epinp/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace epinp {

namespace {

bool is_integral_time(double t) { return std::abs(t - std::round(t)) < 1e-9; }

std::string format_time(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  return buf;
}

}  // namespace

EpidemicEvents::EpidemicEvents(std::vector<Event> events, int population,
                               TimeScale scale)
    : events_(std::move(events)), population_(population), scale_(scale) {
  if (population_ < 1) throw DataError("population must be at least 1");
  if (events_.empty()) throw DataError("event list is empty");
  std::stable_sort(events_.begin(), events_.end(),
                   [](const Event& a, const Event& b) {
                     if (a.time != b.time) return a.time < b.time;
                     return a.kind < b.kind;  // infections before removals
                   });
  for (const Event& e : events_) {
    if (!std::isfinite(e.time)) throw DataError("non-finite event time");
    if (scale_ == TimeScale::Discrete && !is_integral_time(e.time))
      throw DataError("discrete-time event at non-integer time");
    if (e.kind == EventKind::Infection)
      infection_times_.push_back(e.time);
    else
      removal_times_.push_back(e.time);
  }
  if (infection_times_.empty()) throw DataError("no infection events");
  initial_time_ = events_.front().time;
  validate();
}

void EpidemicEvents::validate() const {
  if (events_.front().kind != EventKind::Infection)
    throw DataError("first event must be an infection");
  int x = population_ - 1;  // initial infective consumes one susceptible
  int y = 1;
  if (x < 0) throw DataError("counts exceed population");
  double prev = events_.front().time;
  for (std::size_t k = 1; k < events_.size(); ++k) {
    const Event& e = events_[k];
    if (scale_ == TimeScale::Continuous && !(e.time > prev))
      throw DataError("continuous-time events must be strictly ordered");
    if (e.kind == EventKind::Infection) {
      // Left limits: in discrete time "just before" day t means day t-1, so
      // the infective that caused this infection must predate e.time.
      bool infective_present =
          scale_ == TimeScale::Continuous
              ? y >= 1
              : (e.time - 1 >= initial_time_ && counts(e.time - 1).second >= 1);
      if (x < 1 || !infective_present)
        throw DataError("infection without susceptible/infective present");
      --x;
      ++y;
    } else {
      if (y < 1) throw DataError("removal without infective present");
      --y;
    }
    if (x < 0 || y < 0 || x + y > population_)
      throw DataError("counts exceed population");
    prev = e.time;
  }
  if (removal_times_.size() > infection_times_.size())
    throw DataError("more removals than infections");
}

std::pair<int, int> EpidemicEvents::counts(double t) const {
  if (t < initial_time_)
    throw DataError("count query before the initial infection");
  auto infections =
      std::upper_bound(infection_times_.begin(), infection_times_.end(), t) -
      infection_times_.begin();
  auto removals =
      std::upper_bound(removal_times_.begin(), removal_times_.end(), t) -
      removal_times_.begin();
  return {population_ - static_cast<int>(infections),
          static_cast<int>(infections - removals)};
}

std::pair<int, int> EpidemicEvents::counts_left(double t) const {
  if (t < initial_time_)
    throw DataError("count query before the initial infection");
  auto infections =
      std::lower_bound(infection_times_.begin(), infection_times_.end(), t) -
      infection_times_.begin();
  auto removals =
      std::lower_bound(removal_times_.begin(), removal_times_.end(), t) -
      removal_times_.begin();
  return {population_ - static_cast<int>(infections),
          static_cast<int>(infections - removals)};
}

void EpidemicEvents::write_csv(std::ostream& os) const {
  os << "time,kind,individual\n";
  for (const Event& e : events_) {
    os << format_time(e.time) << ','
       << (e.kind == EventKind::Infection ? 'I' : 'R') << ',';
    if (e.individual != kNoIndividual) os << e.individual;
    os << '\n';
  }
}

EpidemicEvents EpidemicEvents::read_csv(std::istream& is, int population,
                                        TimeScale scale) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty events file");
  std::vector<Event> events;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string time_s, kind_s, indiv_s;
    if (!std::getline(row, time_s, ',') || !std::getline(row, kind_s, ','))
      throw DataError("malformed events row: " + line);
    std::getline(row, indiv_s, ',');
    Event e;
    try {
      e.time = std::stod(time_s);
    } catch (const std::exception&) {
      throw DataError("bad time field: " + time_s);
    }
    if (kind_s == "I")
      e.kind = EventKind::Infection;
    else if (kind_s == "R")
      e.kind = EventKind::Removal;
    else
      throw DataError("event kind must be I or R, got: " + kind_s);
    if (!indiv_s.empty()) e.individual = std::stoi(indiv_s);
    events.push_back(e);
  }
  return EpidemicEvents(std::move(events), population, scale);
}

RemovalData make_removal_data(std::vector<double> times, int population,
                              TimeScale scale, double tie_epsilon) {
  if (times.empty()) throw DataError("no removals");
  if (population < static_cast<int>(times.size()))
    throw DataError("more removals than the population size");
  std::sort(times.begin(), times.end());
  for (double t : times)
    if (!std::isfinite(t)) throw DataError("non-finite removal time");
  if (scale == TimeScale::Discrete) {
    for (double& t : times) {
      if (!is_integral_time(t))
        throw DataError("discrete-time removal at non-integer time");
      t = std::round(t);
    }
  } else {
    // Continuous likelihoods are undefined at ties; spread exact ties by
    // tie_epsilon, rejecting if the spread would reach the next value.
    for (std::size_t k = 0; k < times.size();) {
      std::size_t end = k + 1;
      while (end < times.size() && times[end] == times[k]) ++end;
      std::size_t run = end - k;
      if (run > 1) {
        double last = times[k] + static_cast<double>(run - 1) * tie_epsilon;
        if (end < times.size() && last >= times[end])
          throw DataError("tied removal times cannot be separated within "
                          "the tie tolerance");
        for (std::size_t j = 1; j < run; ++j)
          times[k + j] = times[k] + static_cast<double>(j) * tie_epsilon;
      }
      k = end;
    }
  }
  RemovalData data;
  data.times = std::move(times);
  data.population = population;
  data.scale = scale;
  return data;
}

}  // namespace epinp
