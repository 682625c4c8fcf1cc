#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>

#include "epinp/errors.hpp"

namespace epinp {

// Time-varying infection rate beta(t) >= 0.  Three forms: a constant, a
// tabulated step function, or an arbitrary transformed function (e.g. a link
// applied to a GP field) with a known finite upper bound.
//
// Tabulated values use left-continuous step interpolation: beta(t) equals
// values[k] for t in (grid[k-1], grid[k]], and values[0] at grid[0].  This is
// the convention that matches left limits beta(t-) at event times.
class RateFunction {
 public:
  static RateFunction constant(double beta);
  // grid strictly increasing, values >= 0, same length.
  static RateFunction tabulated(Eigen::VectorXd grid, Eigen::VectorXd values);
  static RateFunction transformed(std::function<double(double)> fn, double sup,
                                  double t_min, double t_max);

  double operator()(double t) const;

  // Finite upper bound beta* = sup_t beta(t).
  double sup() const { return sup_; }
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  bool is_constant() const { return kind_ == Kind::Constant; }

 private:
  enum class Kind { Constant, Tabulated, Transformed };

  RateFunction() = default;

  Kind kind_ = Kind::Constant;
  double constant_ = 0.0;
  Eigen::VectorXd grid_;
  Eigen::VectorXd values_;
  std::function<double(double)> fn_;
  double sup_ = 0.0;
  double t_min_ = -std::numeric_limits<double>::infinity();
  double t_max_ = std::numeric_limits<double>::infinity();
};

}  // namespace epinp
