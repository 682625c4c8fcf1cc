#include "epinp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace epinp {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

void check_kernel(const KernelParams& p) {
  if (!(p.omega > 0) || !(p.length_scale > 0))
    throw ConfigError("kernel parameters omega and length_scale must be > 0");
}

// log density of N(0, L L^T) at v given the lower factor L.
double mvn_log_density(const Eigen::MatrixXd& lower, const Eigen::VectorXd& v) {
  Eigen::VectorXd w = lower.triangularView<Eigen::Lower>().solve(v);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < lower.rows(); ++i)
    log_det += std::log(lower(i, i));
  return -0.5 * w.squaredNorm() - log_det -
         0.5 * static_cast<double>(v.size()) * kLogTwoPi;
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const Eigen::VectorXd& points,
                              const KernelParams& params) {
  check_kernel(params);
  const Eigen::Index n = points.size();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = params.omega;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = squared_exp_kernel(points[i], points[j], params);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& k, double omega,
                                   double initial_rel) {
  const double max_rel = 1e-6;
  for (double rel = initial_rel; rel <= max_rel * 1.0000001; rel *= 10.0) {
    Eigen::MatrixXd attempt = k;
    attempt.diagonal().array() += rel * omega;
    Eigen::LLT<Eigen::MatrixXd> llt(attempt);
    if (llt.info() == Eigen::Success)
      return {Eigen::MatrixXd(llt.matrixL()), rel * omega};
  }
  throw NumericalError("kernel matrix is not positive definite even with "
                       "jitter 1e-6 * omega");
}

GpField::GpField(Eigen::VectorXd grid, Eigen::VectorXd values,
                 KernelParams kernel, double jitter_rel)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      kernel_(kernel),
      jitter_rel_(jitter_rel) {
  check_kernel(kernel_);
  if (grid_.size() == 0 || grid_.size() != values_.size())
    throw UsageError("GpField needs a non-empty grid matching its values");
  for (Eigen::Index i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1]))
      throw UsageError("GpField grid must be strictly increasing");
  if (!values_.allFinite()) throw NumericalError("GpField values not finite");
  JitteredCholesky c =
      jittered_cholesky(kernel_matrix(grid_, kernel_), kernel_.omega,
                        jitter_rel);
  chol_ = std::make_shared<const Eigen::MatrixXd>(std::move(c.lower));
  jitter_ = c.jitter;
}

GpField GpField::with_values(Eigen::VectorXd values) const {
  if (values.size() != grid_.size())
    throw UsageError("with_values: size mismatch");
  if (!values.allFinite()) throw NumericalError("GpField values not finite");
  GpField out = *this;
  out.values_ = std::move(values);
  return out;
}

double GpField::log_prior() const { return mvn_log_density(*chol_, values_); }

GpField sample_gp_prior(const Eigen::VectorXd& grid, const KernelParams& params,
                        Rng& rng, double jitter_rel) {
  GpField field(grid, Eigen::VectorXd::Zero(grid.size()), params, jitter_rel);
  Eigen::VectorXd z(grid.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return field.with_values(field.chol() * z);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> gp_conditional_moments(
    const GpField& field, const Eigen::VectorXd& new_points) {
  const Eigen::Index n = field.size();
  const Eigen::Index m = new_points.size();
  if (m == 0) throw UsageError("gp_conditional_moments: no new points");
  Eigen::MatrixXd cross(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      cross(i, j) =
          squared_exp_kernel(field.grid()[i], new_points[j], field.kernel());
  const auto& lower = field.chol().triangularView<Eigen::Lower>();
  Eigen::MatrixXd b = lower.solve(cross);          // L^{-1} K_gn
  Eigen::VectorXd w = lower.solve(field.values()); // L^{-1} g
  Eigen::VectorXd mean = b.transpose() * w;
  Eigen::MatrixXd cov = kernel_matrix(new_points, field.kernel());
  cov.diagonal().array() += field.jitter();
  cov -= b.transpose() * b;
  // Guard against round-off pushing interpolation variances negative.
  for (Eigen::Index j = 0; j < m; ++j)
    if (cov(j, j) < 0) cov(j, j) = 0.0;
  return {std::move(mean), std::move(cov)};
}

GpField gp_conditional_extend(const GpField& field,
                              const Eigen::VectorXd& new_points, Rng& rng) {
  for (Eigen::Index j = 0; j < new_points.size(); ++j)
    for (Eigen::Index i = 0; i < field.size(); ++i)
      if (new_points[j] == field.grid()[i])
        throw UsageError("gp_conditional_extend: point already on the grid");
  auto [mean, cov] = gp_conditional_moments(field, new_points);
  JitteredCholesky c = jittered_cholesky(cov, field.kernel().omega,
                                         field.jitter_rel_);
  Eigen::VectorXd z(new_points.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  Eigen::VectorXd drawn = mean + c.lower * z;

  // Merge into sorted order, carrying existing values bit-identically.
  const Eigen::Index total = field.size() + new_points.size();
  std::vector<std::pair<double, double>> merged;
  merged.reserve(total);
  for (Eigen::Index i = 0; i < field.size(); ++i)
    merged.emplace_back(field.grid()[i], field.values()[i]);
  for (Eigen::Index j = 0; j < new_points.size(); ++j)
    merged.emplace_back(new_points[j], drawn[j]);
  std::sort(merged.begin(), merged.end());
  Eigen::VectorXd grid(total), values(total);
  for (Eigen::Index i = 0; i < total; ++i) {
    grid[i] = merged[i].first;
    values[i] = merged[i].second;
  }
  return GpField(std::move(grid), std::move(values), field.kernel(),
                 field.jitter_rel_);
}

GpField gp_restrict(const GpField& field, Eigen::Index first,
                    Eigen::Index count) {
  if (first < 0 || count < 1 || first + count > field.size())
    throw UsageError("gp_restrict: bad range");
  if (first == 0 && count == field.size()) return field;
  return GpField(field.grid().segment(first, count),
                 field.values().segment(first, count), field.kernel(),
                 field.jitter_rel_);
}

GpField underrelaxed_proposal(const GpField& field, double epsilon, Rng& rng) {
  if (!(epsilon > 0.0) || !(epsilon <= 1.0))
    throw UsageError("underrelaxed_proposal: epsilon must be in (0, 1]");
  Eigen::VectorXd z(field.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  Eigen::VectorXd v = field.chol() * z;
  double keep = std::sqrt(1.0 - epsilon * epsilon);
  return field.with_values(keep * field.values() + epsilon * v);
}

GpScatter::GpScatter(KernelParams kernel, double jitter_rel)
    : kernel_(kernel), jitter_rel_(jitter_rel) {
  check_kernel(kernel_);
}

void GpScatter::refactor() {
  if (pts_.size() == 0) {
    chol_.resize(0, 0);
    alpha_.resize(0);
    jitter_ = 0.0;
    return;
  }
  JitteredCholesky c =
      jittered_cholesky(kernel_matrix(pts_, kernel_), kernel_.omega,
                        jitter_rel_);
  chol_ = std::move(c.lower);
  jitter_ = c.jitter;
  refresh_alpha();
}

void GpScatter::refresh_alpha() {
  alpha_ = chol_.triangularView<Eigen::Lower>().solve(vals_);
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

void GpScatter::insert(double t, double g) {
  Eigen::Index n = pts_.size();
  pts_.conservativeResize(n + 1);
  vals_.conservativeResize(n + 1);
  pts_[n] = t;
  vals_[n] = g;
  refactor();
}

void GpScatter::remove(Eigen::Index i) {
  Eigen::Index n = pts_.size();
  if (i < 0 || i >= n) throw UsageError("GpScatter::remove: bad index");
  pts_[i] = pts_[n - 1];
  vals_[i] = vals_[n - 1];
  pts_.conservativeResize(n - 1);
  vals_.conservativeResize(n - 1);
  refactor();
}

void GpScatter::replace(Eigen::Index i, double t, double g) {
  if (i < 0 || i >= pts_.size())
    throw UsageError("GpScatter::replace: bad index");
  pts_[i] = t;
  vals_[i] = g;
  refactor();
}

void GpScatter::set_values(const Eigen::VectorXd& vals) {
  if (vals.size() != vals_.size())
    throw UsageError("GpScatter::set_values: size mismatch");
  vals_ = vals;
  refresh_alpha();
}

std::pair<double, double> GpScatter::conditional(double t) const {
  if (pts_.size() == 0) return {0.0, kernel_.omega};
  Eigen::VectorXd k(pts_.size());
  for (Eigen::Index i = 0; i < pts_.size(); ++i)
    k[i] = squared_exp_kernel(pts_[i], t, kernel_);
  Eigen::VectorXd b = chol_.triangularView<Eigen::Lower>().solve(k);
  double mean = k.dot(alpha_);
  double var = kernel_.omega + jitter_ - b.squaredNorm();
  return {mean, std::max(var, 0.0)};
}

std::pair<double, double> GpScatter::conditional_excluding(Eigen::Index i,
                                                           double t) const {
  Eigen::Index n = pts_.size();
  if (i < 0 || i >= n) throw UsageError("conditional_excluding: bad index");
  if (n == 1) return {0.0, kernel_.omega};
  // Remove point i from the conditioning set through the precision matrix:
  //   var(g_i | rest) = 1/Q_ii,   mean(g_i | rest) = g_i - alpha_i / Q_ii,
  // then propagate through the linear predictor a = K^{-1} k(t).
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e[i] = 1.0;
  Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(e);
  double q_ii = w.squaredNorm();  // [(K + jI)^{-1}]_{ii}
  double v_i = 1.0 / q_ii;
  Eigen::VectorXd k(n);
  for (Eigen::Index j = 0; j < n; ++j)
    k[j] = squared_exp_kernel(pts_[j], t, kernel_);
  Eigen::VectorXd a = chol_.triangularView<Eigen::Lower>().solve(k);
  double var_given_all = kernel_.omega + jitter_ - a.squaredNorm();
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(a);
  double mean = k.dot(alpha_) - a[i] * (alpha_[i] * v_i);
  double var = std::max(var_given_all, 0.0) + a[i] * a[i] * v_i;
  return {mean, var};
}

Eigen::VectorXd GpScatter::conditional_mean(
    const Eigen::VectorXd& query) const {
  Eigen::VectorXd out(query.size());
  for (Eigen::Index q = 0; q < query.size(); ++q) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < pts_.size(); ++i)
      m += squared_exp_kernel(pts_[i], query[q], kernel_) * alpha_[i];
    out[q] = m;
  }
  return out;
}

Eigen::VectorXd GpScatter::prior_draw(Rng& rng) const {
  Eigen::VectorXd z(pts_.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return chol_ * z;
}

double GpScatter::log_prior() const { return mvn_log_density(chol_, vals_); }

RateFunction exp_rate_from_field(const GpField& field) {
  Eigen::VectorXd values(field.size());
  for (Eigen::Index k = 0; k < field.size(); ++k)
    values[k] = std::exp(field.values()[k]);
  return RateFunction::tabulated(field.grid(), values);
}

RateFunction sigmoid_rate_from_field(const GpField& field, double beta_star) {
  if (!(beta_star > 0)) throw ConfigError("beta* must be positive");
  // capture by value: the field's factor is shared, copies are cheap
  GpField f = field;
  auto fn = [f, beta_star](double t) {
    Eigen::VectorXd probe(1);
    probe[0] = t;
    auto [mean, cov] = gp_conditional_moments(f, probe);
    return beta_star * link_sigmoid(mean[0]);
  };
  return RateFunction::transformed(std::move(fn), beta_star,
                                   -std::numeric_limits<double>::infinity(),
                                   std::numeric_limits<double>::infinity());
}

}  // namespace epinp
