#include "epinp/rate_function.hpp"

#include <cmath>
#include <utility>

namespace epinp {

RateFunction RateFunction::constant(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw ConfigError("constant rate must be finite and non-negative");
  RateFunction r;
  r.kind_ = Kind::Constant;
  r.constant_ = beta;
  r.sup_ = beta;
  return r;
}

RateFunction RateFunction::tabulated(Eigen::VectorXd grid,
                                     Eigen::VectorXd values) {
  if (grid.size() == 0 || grid.size() != values.size())
    throw ConfigError("tabulated rate needs matching non-empty grid/values");
  for (Eigen::Index k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1]))
      throw ConfigError("tabulated rate grid must be strictly increasing");
  for (Eigen::Index k = 0; k < values.size(); ++k)
    if (!(values[k] >= 0.0) || !std::isfinite(values[k]))
      throw ConfigError("tabulated rate values must be finite, non-negative");
  RateFunction r;
  r.kind_ = Kind::Tabulated;
  r.sup_ = values.maxCoeff();
  r.t_min_ = grid[0];
  r.t_max_ = grid[grid.size() - 1];
  r.grid_ = std::move(grid);
  r.values_ = std::move(values);
  return r;
}

RateFunction RateFunction::transformed(std::function<double(double)> fn,
                                       double sup, double t_min,
                                       double t_max) {
  if (!(sup >= 0.0) || !std::isfinite(sup))
    throw ConfigError("transformed rate bound must be finite, non-negative");
  RateFunction r;
  r.kind_ = Kind::Transformed;
  r.fn_ = std::move(fn);
  r.sup_ = sup;
  r.t_min_ = t_min;
  r.t_max_ = t_max;
  return r;
}

double RateFunction::operator()(double t) const {
  switch (kind_) {
    case Kind::Constant:
      return constant_;
    case Kind::Tabulated: {
      if (t < t_min_ || t > t_max_)
        throw UsageError("rate queried outside the tabulated domain");
      const double* begin = grid_.data();
      const double* end = begin + grid_.size();
      const double* it = std::lower_bound(begin, end, t);
      return values_[it - begin];
    }
    case Kind::Transformed: {
      if (t < t_min_ || t > t_max_)
        throw UsageError("rate queried outside the transformed domain");
      double v = fn_(t);
      if (!(v >= 0.0))
        throw NumericalError("transformed rate produced a negative value");
      return v;
    }
  }
  return 0.0;
}

}  // namespace epinp
