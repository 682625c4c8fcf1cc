#pragma once

#include <Eigen/Dense>
#include <memory>
#include <utility>

#include "epinp/errors.hpp"
#include "epinp/rate_function.hpp"
#include "epinp/rng.hpp"

namespace epinp {

// Squared-exponential kernel parameters: marginal variance omega (on the g
// scale) and length scale l (time units).
struct KernelParams {
  double omega = 1.0;
  double length_scale = 1.0;
};

inline double squared_exp_kernel(double a, double b, const KernelParams& p) {
  double d = (a - b) / p.length_scale;
  return p.omega * std::exp(-0.5 * d * d);
}

// Dense kernel matrix; bitwise symmetric, K_ii = omega exactly.
Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& points,
                              const KernelParams& params);

// Lower Cholesky factor of K + jitter*I.  The jitter starts at
// initial_rel*omega, escalates tenfold up to 1e-6*omega, then fails with
// NumericalError.
struct JitteredCholesky {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& k, double omega,
                                   double initial_rel = 1e-10);

// A zero-mean GP restricted to a strictly increasing grid, carrying its
// values and the cached Cholesky factor of the (jittered) kernel matrix.
// Immutable; value replacement on the same grid shares the factor.
class GpField {
 public:
  GpField(Eigen::VectorXd grid, Eigen::VectorXd values, KernelParams kernel,
          double jitter_rel = 1e-10);

  const Eigen::VectorXd& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  const KernelParams& kernel() const { return kernel_; }
  const Eigen::MatrixXd& chol() const { return *chol_; }
  double jitter() const { return jitter_; }
  Eigen::Index size() const { return grid_.size(); }

  // Same grid and factor, new values.
  GpField with_values(Eigen::VectorXd values) const;

  // log N(values | 0, K + jitter I).
  double log_prior() const;

 private:
  Eigen::VectorXd grid_;
  Eigen::VectorXd values_;
  KernelParams kernel_;
  std::shared_ptr<const Eigen::MatrixXd> chol_;
  double jitter_ = 0.0;
  double jitter_rel_ = 1e-10;

  friend GpField gp_conditional_extend(const GpField&, const Eigen::VectorXd&,
                                       Rng&);
  friend GpField gp_restrict(const GpField&, Eigen::Index, Eigen::Index);
};

GpField sample_gp_prior(const Eigen::VectorXd& grid, const KernelParams& params,
                        Rng& rng, double jitter_rel = 1e-10);

// Mean and covariance of the Gaussian conditional at new_points given the
// field's values.  The covariance includes the same diagonal jitter as the
// prior, so that extend-then-evaluate is consistent with a joint draw.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> gp_conditional_moments(
    const GpField& field, const Eigen::VectorXd& new_points);

// Extend the field to the union grid, drawing values at new_points from the
// conditional given the existing ones.  Existing values are carried over
// bit-identically.  new_points must be disjoint from the grid.
GpField gp_conditional_extend(const GpField& field,
                              const Eigen::VectorXd& new_points, Rng& rng);

// Keep a contiguous sub-grid [first, first+count); values carried over.
GpField gp_restrict(const GpField& field, Eigen::Index first,
                    Eigen::Index count);

// Prior-reversible proposal g~ = sqrt(1 - eps^2) g + eps V with V ~ N(0, K):
// leaves N(0, K) invariant.  eps in (0, 1]; eps = 1 is an independent prior
// draw.
GpField underrelaxed_proposal(const GpField& field, double epsilon, Rng& rng);

// Rate functions backed by a field: beta(t) = exp(g(t)) with g step-held on
// the grid, or beta(t) = beta* sigma(m(t)) with m the GP conditional mean
// (bounded by beta*, so usable with the thinning simulator).
RateFunction exp_rate_from_field(const GpField& field);
RateFunction sigmoid_rate_from_field(const GpField& field, double beta_star);

inline double link_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline double link_exp(double z) { return std::exp(z); }

// log sigma(z), saturating instead of underflowing.
inline double log_sigmoid(double z) {
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

// Scattered-point GP state for samplers whose support points move: keeps
// (points, values) in insertion order with the factor of the jittered kernel
// matrix cached.  Structural edits refactor; value-only edits do not.
class GpScatter {
 public:
  explicit GpScatter(KernelParams kernel, double jitter_rel = 1e-10);

  Eigen::Index size() const { return pts_.size(); }
  double point(Eigen::Index i) const { return pts_[i]; }
  double value(Eigen::Index i) const { return vals_[i]; }
  const Eigen::VectorXd& points() const { return pts_; }
  const Eigen::VectorXd& values() const { return vals_; }
  const KernelParams& kernel() const { return kernel_; }
  double jitter() const { return jitter_; }

  void insert(double t, double g);
  void remove(Eigen::Index i);                      // swap-remove
  void replace(Eigen::Index i, double t, double g);
  void set_values(const Eigen::VectorXd& vals);     // keeps the factor

  // (mean, variance) of g(t) conditional on all points.
  std::pair<double, double> conditional(double t) const;
  // (mean, variance) of g(t) conditional on all points except index i.
  std::pair<double, double> conditional_excluding(Eigen::Index i,
                                                  double t) const;
  // Conditional mean of g at each query point given all points.
  Eigen::VectorXd conditional_mean(const Eigen::VectorXd& query) const;

  // L z with z standard normal: a prior draw over the current points.
  Eigen::VectorXd prior_draw(Rng& rng) const;

  double log_prior() const;  // log N(values | 0, K + jitter I)

 private:
  KernelParams kernel_;
  double jitter_rel_;
  Eigen::VectorXd pts_;
  Eigen::VectorXd vals_;
  Eigen::MatrixXd chol_;   // lower factor of K + jitter I
  Eigen::VectorXd alpha_;  // (K + jitter I)^{-1} values
  double jitter_ = 0.0;

  void refactor();
  void refresh_alpha();
};

}  // namespace epinp
