#include "epinp/discrete_gp_mcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

namespace epinp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct DayCounts {
  int day_lo = 0;
  std::vector<int> x, y;  // X(t), Y(t) for t in [day_lo, day_hi]

  int X(int t) const { return x[static_cast<std::size_t>(t - day_lo)]; }
  int Y(int t) const { return y[static_cast<std::size_t>(t - day_lo)]; }
};

DayCounts build_counts(const std::vector<int>& i, const std::vector<int>& r,
                       int population, int day_lo, int day_hi) {
  DayCounts c;
  c.day_lo = day_lo;
  c.x.assign(static_cast<std::size_t>(day_hi - day_lo + 1), population);
  c.y.assign(static_cast<std::size_t>(day_hi - day_lo + 1), 0);
  for (std::size_t j = 0; j < i.size(); ++j) {
    for (int t = std::max(i[j], day_lo); t <= day_hi; ++t)
      c.x[static_cast<std::size_t>(t - day_lo)] -= 1;
    for (int t = std::max(i[j], day_lo);
         t <= std::min(r[j] - 1, day_hi); ++t)
      c.y[static_cast<std::size_t>(t - day_lo)] += 1;
  }
  return c;
}

}  // namespace

double discrete_log_h(const std::vector<int>& infection_days, int kappa,
                      const std::vector<int>& removal_days, int population,
                      const std::function<double(int)>& beta) {
  const std::size_t n = infection_days.size();
  if (n == 0 || n != removal_days.size())
    throw UsageError("discrete_log_h: mismatched infection/removal days");
  if (kappa < 0 || static_cast<std::size_t>(kappa) >= n)
    throw UsageError("discrete_log_h: kappa out of range");
  if (static_cast<int>(n) > population)
    throw UsageError("discrete_log_h: more cases than the population");

  const int i_kappa = infection_days[static_cast<std::size_t>(kappa)];
  for (std::size_t j = 0; j < n; ++j) {
    if (removal_days[j] <= infection_days[j]) return kNegInf;
    if (static_cast<int>(j) != kappa && infection_days[j] <= i_kappa)
      return kNegInf;  // the initial infective must be strictly first
  }
  const int last = *std::max_element(removal_days.begin(), removal_days.end());
  DayCounts c = build_counts(infection_days, removal_days, population,
                             i_kappa, last);

  double log_h = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (static_cast<int>(j) == kappa) continue;
    int e = infection_days[j] - 1;
    double term = log1mexp(beta(e) * c.Y(e));
    if (term == kNegInf) return kNegInf;
    log_h += term;
  }
  for (int t = i_kappa; t <= last - 1; ++t)
    log_h -= beta(t) * c.Y(t) * c.X(t + 1);
  return log_h;
}

double discrete_augmented_loglik(const std::vector<int>& infection_days,
                                 int kappa,
                                 const std::vector<int>& removal_days,
                                 int population,
                                 const std::function<double(int)>& beta,
                                 double gamma) {
  if (!(gamma > 0) || !(gamma < 1)) return kNegInf;
  double log_h = discrete_log_h(infection_days, kappa, removal_days,
                                population, beta);
  if (log_h == kNegInf) return kNegInf;
  double log_periods = 0.0;
  for (std::size_t j = 0; j < infection_days.size(); ++j) {
    long long k = removal_days[j] - infection_days[j];
    log_periods += std::log(gamma) +
                   static_cast<double>(k - 1) * std::log1p(-gamma);
  }
  return log_h + log_periods;
}

double gibbs_gamma_discrete(int n, long long period_sum,
                            const BetaPrior& prior, Rng& rng) {
  if (period_sum < n)
    throw UsageError("gibbs_gamma_discrete: periods must all be >= 1");
  return rng.beta(n + prior.a,
                  static_cast<double>(period_sum - n) + prior.b);
}

std::vector<DailyMlEstimate> ml_daily_estimates(const EpidemicEvents& events) {
  if (events.scale() != TimeScale::Discrete)
    throw UsageError("ml_daily_estimates needs a discrete-time epidemic");
  std::vector<DailyMlEstimate> out;
  const int first = static_cast<int>(events.initial_time());
  const int last = static_cast<int>(events.removal_times().back());
  for (int t = first; t < last; ++t) {
    auto [x, y] = events.counts(t);
    if (x < 1 || y < 1) continue;
    int x_next = events.counts(t + 1).first;
    int c = x - x_next;
    DailyMlEstimate e;
    e.day = t;
    if (c == x) {
      e.beta_hat = std::numeric_limits<double>::infinity();
      e.saturated = true;
    } else {
      e.beta_hat = -std::log1p(-static_cast<double>(c) / x) / y;
    }
    out.push_back(e);
  }
  return out;
}

DiscreteGpSampler::DiscreteGpSampler(
    const RemovalData& data, const BetaPrior& prior, const KernelParams& kernel,
    const McmcOptions& options,
    const std::optional<std::vector<int>>& known_infections)
    : n_(data.count()),
      population_(data.population),
      prior_(prior),
      kernel_(kernel),
      options_(options),
      field_(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), kernel) {
  if (data.scale != TimeScale::Discrete)
    throw DataError("the discrete sampler needs integer removal days");
  if (!(prior_.a > 0) || !(prior_.b > 0))
    throw ConfigError("Beta prior parameters must be positive");
  r_.reserve(static_cast<std::size_t>(n_));
  for (double t : data.times) r_.push_back(static_cast<int>(std::llround(t)));
  last_day_ = r_.back();

  const double prior_mean_gamma = prior_.a / (prior_.a + prior_.b);
  const double prior_mean_period = 1.0 / prior_mean_gamma;
  floor_day_ = r_.front() -
               static_cast<int>(std::ceil(options_.floor_multiplier *
                                          prior_mean_period));
  gamma_ = prior_mean_gamma;

  Rng init_rng(options_.seed, 0x171);
  if (known_infections.has_value()) {
    i_ = *known_infections;
    if (static_cast<int>(i_.size()) != n_)
      throw DataError("known infection days must match the removal count");
    auto arg = std::min_element(i_.begin(), i_.end());
    kappa_ = static_cast<int>(arg - i_.begin());
    for (std::size_t j = 0; j < i_.size(); ++j) {
      if (i_[j] >= r_[j]) throw DataError("infection day at/after removal");
      if (static_cast<int>(j) != kappa_ && i_[j] <= i_[kappa_])
        throw DataError("known infections need a unique earliest case");
    }
    if (i_[static_cast<std::size_t>(kappa_)] < floor_day_)
      floor_day_ = i_[static_cast<std::size_t>(kappa_)];
  } else {
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      i_.assign(static_cast<std::size_t>(n_), 0);
      for (int j = 0; j < n_; ++j)
        i_[static_cast<std::size_t>(j)] =
            std::max(floor_day_,
                     r_[static_cast<std::size_t>(j)] -
                         static_cast<int>(init_rng.geometric(prior_mean_gamma)));
      // Repair coverage gaps: every day between the first infection and the
      // last removal needs an infective, else later infections are
      // impossible.  Pull the earliest infection past each gap back onto it.
      for (int pass = 0; pass < 4 * n_; ++pass) {
        int dmin = *std::min_element(i_.begin(), i_.end());
        int gap = -1;
        for (int d = dmin; d < last_day_; ++d) {
          int y = 0;
          for (std::size_t k = 0; k < i_.size(); ++k)
            if (i_[k] <= d && d < r_[k]) ++y;
          if (y == 0) {
            gap = d;
            break;
          }
        }
        if (gap < 0) break;
        int best = -1;
        for (std::size_t k = 0; k < i_.size(); ++k)
          if (i_[k] > gap && (best < 0 || i_[k] < i_[static_cast<std::size_t>(best)]))
            best = static_cast<int>(k);
        if (best < 0) break;  // no infection beyond the gap: nothing to fix
        i_[static_cast<std::size_t>(best)] = gap;
      }
      auto arg = std::min_element(i_.begin(), i_.end());
      kappa_ = static_cast<int>(arg - i_.begin());
      if (i_[static_cast<std::size_t>(kappa_)] < floor_day_) continue;
      bool unique_min = true;
      for (std::size_t k = 0; k < i_.size(); ++k)
        if (static_cast<int>(k) != kappa_ &&
            i_[k] <= i_[static_cast<std::size_t>(kappa_)])
          unique_min = false;
      if (!unique_min) continue;
      if (options_.no_data) {
        ok = true;
      } else {
        double lh = discrete_log_h(i_, kappa_, r_, population_,
                                   [](int) { return 1.0; });
        ok = std::isfinite(lh);
      }
    }
    if (!ok)
      throw NumericalError(
          "discrete sampler: no valid starting configuration in 100 attempts");
  }

  const int dmin = i_[static_cast<std::size_t>(kappa_)];
  Eigen::VectorXd grid(last_day_ - dmin);
  for (Eigen::Index k = 0; k < grid.size(); ++k)
    grid[k] = dmin + static_cast<int>(k);
  field_ = GpField(grid, Eigen::VectorXd::Zero(grid.size()), kernel_);
  rebuild_counts_and_caches();
}

void DiscreteGpSampler::rebuild_counts_and_caches() {
  const std::size_t width = static_cast<std::size_t>(last_day_ - floor_day_ + 1);
  x_.assign(width, population_);
  y_.assign(width, 0);
  infs_at_day_.assign(width, {});
  period_sum_ = 0;
  for (std::size_t j = 0; j < i_.size(); ++j) {
    for (int t = std::max(i_[j], floor_day_); t <= last_day_; ++t)
      x_[static_cast<std::size_t>(idx(t))] -= 1;
    for (int t = std::max(i_[j], floor_day_);
         t <= std::min(r_[j] - 1, last_day_); ++t)
      y_[static_cast<std::size_t>(idx(t))] += 1;
    infs_at_day_[static_cast<std::size_t>(idx(i_[j]))].push_back(
        static_cast<int>(j));
    period_sum_ += r_[j] - i_[j];
  }
  auto [se, si] = sums_for_values(field_.values());
  sum_exp_ = se;
  sum_inf_ = si;
}

std::pair<double, double> DiscreteGpSampler::sums_for_values(
    const Eigen::VectorXd& values) const {
  const int dmin = day_min();
  double sum_exp = 0.0;
  for (int t = dmin; t <= last_day_ - 1; ++t) {
    int yy = y_[static_cast<std::size_t>(idx(t))];
    int xx = x_[static_cast<std::size_t>(idx(t + 1))];
    if (yy == 0 || xx == 0) continue;
    sum_exp += std::exp(values[t - dmin]) * yy * xx;
  }
  double sum_inf = 0.0;
  for (std::size_t j = 0; j < i_.size(); ++j) {
    if (static_cast<int>(j) == kappa_) continue;
    int e = i_[j] - 1;
    sum_inf += log1mexp(std::exp(values[e - dmin]) *
                        y_[static_cast<std::size_t>(idx(e))]);
  }
  return {sum_exp, sum_inf};
}

double DiscreteGpSampler::log_h_scratch() const {
  return discrete_log_h(i_, kappa_, r_, population_,
                        [this](int t) { return beta_at(t); });
}

void DiscreteGpSampler::check_caches(double tol) const {
  DayCounts c = build_counts(i_, r_, population_, floor_day_, last_day_);
  for (int t = floor_day_; t <= last_day_; ++t) {
    if (c.X(t) != x_[static_cast<std::size_t>(idx(t))] ||
        c.Y(t) != y_[static_cast<std::size_t>(idx(t))])
      throw NumericalError("daily count cache drifted");
  }
  auto [se, si] = sums_for_values(field_.values());
  if (std::abs(se - sum_exp_) > tol * std::max(1.0, std::abs(se)))
    throw NumericalError("escape-exponent cache drifted beyond tolerance");
  bool inf_ok = (si == sum_inf_) ||
                std::abs(si - sum_inf_) <= tol * std::max(1.0, std::abs(si));
  if (!inf_ok)
    throw NumericalError("infection-product cache drifted beyond tolerance");
}

double DiscreteGpSampler::beta_at(int day) const {
  if (day < day_min() || day > last_day_ - 1)
    throw UsageError("beta_at: day outside the field grid");
  return std::exp(field_value(day));
}

void DiscreteGpSampler::step_gamma(Rng& rng) {
  if (options_.fix_gamma) return;
  if (options_.no_data)
    gamma_ = rng.beta(prior_.a, prior_.b);
  else
    gamma_ = gibbs_gamma_discrete(n_, period_sum_, prior_, rng);
}

bool DiscreteGpSampler::step_infection_move(Rng& rng) {
  ++inf_proposed_;
  const std::size_t j = rng.uniform_index(static_cast<std::uint64_t>(n_));
  const long long w = rng.geometric(gamma_);
  const long long proposed_ll = static_cast<long long>(r_[j]) - w;
  const int iold = i_[j];
  if (proposed_ll < floor_day_) {
    ++floor_rejects_;
    if (!floor_warned_) {
      std::fprintf(stderr,
                   "warning: an infection-time proposal reached the hard "
                   "floor i_kappa >= %d; the improper prior is being "
                   "truncated there\n",
                   floor_day_);
      floor_warned_ = true;
    }
    return false;
  }
  const int inew = static_cast<int>(proposed_ll);
  if (inew == iold) {
    ++inf_accepted_;
    return true;
  }
  const int i_kappa = i_[static_cast<std::size_t>(kappa_)];
  if (static_cast<int>(j) != kappa_ && inew == i_kappa)
    return false;  // two earliest infections: zero likelihood

  // The initial-infective label always tracks the earliest infection, so any
  // move that touches the minimum (including kappa moving later past another
  // case) changes the grid and takes the slow path.
  const bool structural_change =
      static_cast<int>(j) == kappa_ || inew < i_kappa;
  if (structural_change) {
    if (slow_path_move(j, inew, rng)) {
      ++inf_accepted_;
      return true;
    }
    return false;
  }

  // Fast path: the grid and kappa are untouched; the daily counts change on
  // [lo, hi) only, and the h-ratio is assembled from the affected days.
  const int a = iold, b = inew;
  const int lo = std::min(a, b), hi = std::max(a, b);
  const int dmin = i_kappa;

  auto local_sums = [&](int own_day) {
    double e_part = 0.0;
    for (int t = std::max(lo - 1, dmin); t <= hi - 1; ++t) {
      int yy = y_[static_cast<std::size_t>(idx(t))];
      int xx = x_[static_cast<std::size_t>(idx(t + 1))];
      if (yy && xx) e_part += beta_at(t) * yy * xx;
    }
    double i_part = 0.0;
    for (int e = lo; e <= hi - 1; ++e) {
      for (int jj : infs_at_day_[static_cast<std::size_t>(idx(e + 1))]) {
        if (jj == kappa_ || jj == static_cast<int>(j)) continue;
        i_part += log1mexp(beta_at(e) *
                           y_[static_cast<std::size_t>(idx(e))]);
      }
    }
    i_part += log1mexp(beta_at(own_day - 1) *
                       y_[static_cast<std::size_t>(idx(own_day - 1))]);
    return std::make_pair(e_part, i_part);
  };

  auto [e_old, i_old_part] = local_sums(a);

  const int shift = b > a ? -1 : +1;  // effect on Y over the swept days
  for (int t = lo; t < hi; ++t) {
    y_[static_cast<std::size_t>(idx(t))] += shift;
    x_[static_cast<std::size_t>(idx(t))] -= shift;
  }
  auto [e_new, i_new_part] = local_sums(b);

  double delta = (i_new_part - i_old_part) - (e_new - e_old);
  bool accept = options_.no_data || delta >= 0 ||
                std::log(rng.uniform()) < delta;
  if (!accept) {
    for (int t = lo; t < hi; ++t) {
      y_[static_cast<std::size_t>(idx(t))] -= shift;
      x_[static_cast<std::size_t>(idx(t))] += shift;
    }
    return false;
  }
  i_[j] = b;
  auto& from = infs_at_day_[static_cast<std::size_t>(idx(a))];
  from.erase(std::find(from.begin(), from.end(), static_cast<int>(j)));
  infs_at_day_[static_cast<std::size_t>(idx(b))].push_back(
      static_cast<int>(j));
  sum_exp_ += e_new - e_old;
  sum_inf_ += i_new_part - i_old_part;
  period_sum_ += a - b;
  ++inf_accepted_;
  return true;
}

bool DiscreteGpSampler::slow_path_move(std::size_t j, int inew, Rng& rng) {
  std::vector<int> cand = i_;
  cand[j] = inew;
  // kappa follows the unique earliest infection of the proposal; a tied
  // minimum has zero likelihood and is rejected outright.
  int kappa_new = 0;
  int min_count = 1;
  for (std::size_t k = 1; k < cand.size(); ++k) {
    if (cand[k] < cand[static_cast<std::size_t>(kappa_new)]) {
      kappa_new = static_cast<int>(k);
      min_count = 1;
    } else if (cand[k] == cand[static_cast<std::size_t>(kappa_new)]) {
      ++min_count;
    }
  }
  if (min_count > 1) return false;

  const int dmin_old = i_[static_cast<std::size_t>(kappa_)];
  const int dmin_new = cand[static_cast<std::size_t>(kappa_new)];

  // Propose g on any new days from the GP conditional prior; those factors
  // cancel against the prior extension in the acceptance ratio, as does the
  // reverse-direction truncation.
  Eigen::VectorXd drawn;
  Eigen::VectorXd new_days;
  if (dmin_new < dmin_old) {
    new_days.resize(dmin_old - dmin_new);
    for (Eigen::Index k = 0; k < new_days.size(); ++k)
      new_days[k] = dmin_new + static_cast<int>(k);
    if (options_.fix_g) {
      drawn = Eigen::VectorXd::Zero(new_days.size());
    } else {
      auto [mean, cov] = gp_conditional_moments(field_, new_days);
      JitteredCholesky c = jittered_cholesky(cov, kernel_.omega, 0.0);
      Eigen::VectorXd z(new_days.size());
      for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
      drawn = mean + c.lower * z;
    }
  }

  auto cand_beta = [&](int t) -> double {
    if (t >= dmin_old) return std::exp(field_.values()[t - dmin_old]);
    return std::exp(drawn[t - dmin_new]);
  };
  double cand_log_h = options_.no_data
                          ? 0.0
                          : discrete_log_h(cand, kappa_new, r_, population_,
                                           cand_beta);
  double delta = cand_log_h - log_h();
  bool accept = options_.no_data || delta >= 0 ||
                std::log(rng.uniform()) < delta;
  if (!accept) return false;

  period_sum_ += i_[j] - inew;
  i_ = std::move(cand);
  kappa_ = kappa_new;
  if (dmin_new < dmin_old) {
    Eigen::VectorXd grid(last_day_ - dmin_new);
    Eigen::VectorXd values(grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
      int day = dmin_new + static_cast<int>(k);
      grid[k] = day;
      values[k] = day < dmin_old ? drawn[day - dmin_new]
                                 : field_.values()[day - dmin_old];
    }
    field_ = GpField(std::move(grid), std::move(values), kernel_);
  } else if (dmin_new > dmin_old) {
    field_ = gp_restrict(field_, dmin_new - dmin_old,
                         field_.size() - (dmin_new - dmin_old));
  }
  rebuild_counts_and_caches();
  return true;
}

bool DiscreteGpSampler::step_g_update(Rng& rng) {
  if (options_.fix_g || !(options_.epsilon > 0)) return false;
  ++g_proposed_;
  GpField proposal = underrelaxed_proposal(field_, options_.epsilon, rng);
  if (options_.no_data) {
    field_ = std::move(proposal);
    ++g_accepted_;
    return true;
  }
  auto [se, si] = sums_for_values(proposal.values());
  double delta = (si - se) - (sum_inf_ - sum_exp_);
  if (delta >= 0 || std::log(rng.uniform()) < delta) {
    field_ = std::move(proposal);
    sum_exp_ = se;
    sum_inf_ = si;
    ++g_accepted_;
    return true;
  }
  return false;
}

void DiscreteGpSampler::sweep(Rng& rng) {
  step_gamma(rng);
  if (!options_.fix_infection_times) {
    int moves = options_.moves_per_sweep > 0 ? options_.moves_per_sweep : n_;
    for (int k = 0; k < moves; ++k) step_infection_move(rng);
  }
  for (int k = 0; k < options_.g_updates_per_sweep; ++k) step_g_update(rng);
}

std::int64_t DiscreteGpSampler::proposed(const char* move) const {
  if (std::strcmp(move, "infection_move") == 0) return inf_proposed_;
  if (std::strcmp(move, "g_update") == 0) return g_proposed_;
  throw UsageError("unknown move counter");
}

std::int64_t DiscreteGpSampler::accepted(const char* move) const {
  if (std::strcmp(move, "infection_move") == 0) return inf_accepted_;
  if (std::strcmp(move, "g_update") == 0) return g_accepted_;
  throw UsageError("unknown move counter");
}

ChainOutput run_discrete_gp_mcmc(
    const RemovalData& data, const BetaPrior& prior, const KernelParams& kernel,
    const McmcOptions& options,
    const std::optional<std::vector<int>>& known_infections) {
  if (options.iterations < 1) throw ConfigError("iterations must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  DiscreteGpSampler sampler(data, prior, kernel, options, known_infections);
  Rng rng(options.seed, 0xd15);

  const int burnin = options.resolved_burnin();
  const int retained =
      (options.iterations - burnin + options.thin - 1) / options.thin;
  if (retained < 1)
    throw ConfigError("no retained iterations; reduce burnin or thin");
  const int day_lo = sampler.floor_day();
  const int day_hi = sampler.removal_days().back() - 1;

  ChainOutput out;
  out.scalar_names = {"gamma", "kappa", "i_kappa"};
  out.scalars.resize(retained, 3);
  out.days.resize(day_hi - day_lo + 1);
  for (Eigen::Index d = 0; d < out.days.size(); ++d)
    out.days[d] = day_lo + static_cast<int>(d);
  out.beta.setConstant(retained, out.days.size(),
                       std::numeric_limits<double>::quiet_NaN());
  out.seed = options.seed;
  out.iterations = options.iterations;
  out.burnin = burnin;
  out.thin = options.thin;

  Eigen::Index row = 0;
  for (int iter = 0; iter < options.iterations; ++iter) {
    sampler.sweep(rng);
    if (options.check_every > 0 && (iter + 1) % options.check_every == 0)
      sampler.check_caches();
    if (iter >= burnin && (iter - burnin) % options.thin == 0 &&
        row < retained) {
      out.scalars(row, 0) = sampler.gamma();
      out.scalars(row, 1) = sampler.kappa() + 1;  // 1-based label
      out.scalars(row, 2) = sampler.day_min();
      for (int d = sampler.day_min(); d <= day_hi; ++d)
        out.beta(row, d - day_lo) = sampler.beta_at(d);
      ++row;
    }
  }

  // Drop leading days never visited by any retained iteration.
  Eigen::Index first_present = 0;
  while (first_present < out.days.size() &&
         out.beta.col(first_present).array().isNaN().all())
    ++first_present;
  if (first_present > 0) {
    out.days = out.days.tail(out.days.size() - first_present).eval();
    out.beta = out.beta.rightCols(out.beta.cols() - first_present).eval();
  }

  out.counters["infection_move.proposed"] = sampler.proposed("infection_move");
  out.counters["infection_move.accepted"] = sampler.accepted("infection_move");
  out.counters["g_update.proposed"] = sampler.proposed("g_update");
  out.counters["g_update.accepted"] = sampler.accepted("g_update");
  out.counters["floor_rejects"] = sampler.floor_rejects();
  auto rate = [](std::int64_t acc, std::int64_t prop) {
    return prop > 0 ? static_cast<double>(acc) / static_cast<double>(prop)
                    : 0.0;
  };
  out.acceptance["infection_move"] =
      rate(sampler.accepted("infection_move"), sampler.proposed("infection_move"));
  out.acceptance["g_update"] =
      rate(sampler.accepted("g_update"), sampler.proposed("g_update"));
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace epinp
