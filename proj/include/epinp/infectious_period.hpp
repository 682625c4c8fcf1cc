#pragma once

#include <cmath>

#include "epinp/errors.hpp"
#include "epinp/events.hpp"
#include "epinp/rng.hpp"

namespace epinp {

// Infectious period distribution: Exponential(mean 1/gamma) in continuous
// time, Geometric on {1, 2, ...} with pmf gamma (1-gamma)^{k-1} in discrete
// time.
class InfectiousPeriodModel {
 public:
  static InfectiousPeriodModel exponential(double gamma) {
    if (!(gamma > 0)) throw ConfigError("exponential rate must be positive");
    return InfectiousPeriodModel(TimeScale::Continuous, gamma);
  }

  static InfectiousPeriodModel geometric(double gamma) {
    if (!(gamma > 0) || !(gamma < 1))
      throw ConfigError("geometric parameter must lie in (0, 1)");
    return InfectiousPeriodModel(TimeScale::Discrete, gamma);
  }

  TimeScale scale() const { return scale_; }
  double gamma() const { return gamma_; }
  double mean() const { return 1.0 / gamma_; }

  double sample(Rng& rng) const {
    if (scale_ == TimeScale::Continuous) return rng.exponential(gamma_);
    return static_cast<double>(rng.geometric(gamma_));
  }

  // log pmf of an integer period (discrete models only).
  double log_pmf(long long k) const {
    if (scale_ != TimeScale::Discrete)
      throw UsageError("log_pmf is defined for discrete periods only");
    if (k < 1) return -std::numeric_limits<double>::infinity();
    return std::log(gamma_) + static_cast<double>(k - 1) * std::log1p(-gamma_);
  }

 private:
  InfectiousPeriodModel(TimeScale scale, double gamma)
      : scale_(scale), gamma_(gamma) {}

  TimeScale scale_;
  double gamma_;
};

}  // namespace epinp
