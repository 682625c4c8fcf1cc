#include "epinp/cts_gp_mcmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>

namespace epinp {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double thinning_sigma_log_factors(const Eigen::VectorXd& g_retained,
                                  const Eigen::VectorXd& g_thinned) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < g_retained.size(); ++k)
    s += log_sigmoid(g_retained[k]);
  for (Eigen::Index m = 0; m < g_thinned.size(); ++m)
    s += log_sigmoid(-g_thinned[m]);
  return s;
}

double sgcp_augmented_loglik(const Eigen::VectorXd& g_observed,
                             const Eigen::VectorXd& g_thinned,
                             double lambda_star, double t_end) {
  if (!(lambda_star > 0) || !(t_end > 0))
    throw UsageError("sgcp_augmented_loglik: lambda* and T must be positive");
  double points = static_cast<double>(g_observed.size() + g_thinned.size());
  return points * std::log(lambda_star) - lambda_star * t_end +
         thinning_sigma_log_factors(g_observed, g_thinned);
}

double sir_thinned_augmented_loglik(
    double i1, const std::vector<double>& infections,
    const Eigen::VectorXd& g_infections, const std::vector<double>& thinned,
    const Eigen::VectorXd& g_thinned, const std::vector<double>& removals,
    int population, double beta_star, double gamma) {
  if (static_cast<Eigen::Index>(infections.size()) != g_infections.size() ||
      static_cast<Eigen::Index>(thinned.size()) != g_thinned.size())
    throw UsageError("sir_thinned_augmented_loglik: g values misaligned");
  if (!(beta_star > 0) || !(gamma > 0)) return kNegInf;
  SirPath path(i1, infections, removals, population);
  if (!path.valid()) return kNegInf;

  double ll = 0.0;
  for (const SirPath::PathEvent& e : path.events()) {
    double rate = e.kind == EventKind::Infection
                      ? beta_star * e.x_left * e.y_left
                      : gamma * e.y_left;
    if (rate <= 0) return kNegInf;
    ll += std::log(rate);
  }
  for (std::size_t m = 0; m < thinned.size(); ++m) {
    if (!(thinned[m] > i1) || !(thinned[m] < removals.back())) return kNegInf;
    auto [x, y] = path.counts_left(thinned[m]);
    if (x * y < 1) return kNegInf;
    ll += std::log(beta_star * x * y);
  }
  ll += thinning_sigma_log_factors(g_infections, g_thinned);
  ll -= beta_star * path.integral_xy() + gamma * path.integral_y();
  return ll;
}

CtsGpSampler::CtsGpSampler(const RemovalData& data, const CtsGpPriors& priors,
                           const KernelParams& kernel,
                           const McmcOptions& options)
    : r_(data.times),
      n_(data.count()),
      population_(data.population),
      priors_(priors),
      kernel_(kernel),
      options_(options),
      scatter_(kernel),
      path_(0.0, {}, {}, 1) {
  if (data.scale != TimeScale::Continuous)
    throw DataError("the continuous sampler needs real-valued removal times");
  if (options_.no_data && !options_.fix_infection_times)
    throw ConfigError("continuous prior-reproduction runs require fixed "
                      "infection times");
  gamma_ = priors_.gamma.shape / priors_.gamma.rate;
  beta_star_ = priors_.beta_star.shape / priors_.beta_star.rate;

  Rng init_rng(options_.seed, 0xc7a);
  const double gamma0 = gamma_;
  bool ok = false;
  for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
    i1_ = r_[0] - init_rng.exponential(gamma0) -
          init_rng.exponential(priors_.init_gap_rate);
    std::vector<double> inf;
    for (int j = 1; j < n_; ++j) {
      double t = r_[static_cast<std::size_t>(j)] -
                 init_rng.exponential(gamma0);
      inf.push_back(std::max(t, i1_ + 1e-9));
    }
    // Repair coverage gaps: whenever the infective count would hit zero
    // before the final removal, pull the earliest later infection back to
    // just before the removal that emptied the infectives.
    for (int pass = 0; pass < 4 * n_; ++pass) {
      std::vector<double> sorted_inf = inf;
      std::sort(sorted_inf.begin(), sorted_inf.end());
      std::size_t ii = 0, ri = 0;
      int y = 1;
      double gap_at = std::numeric_limits<double>::quiet_NaN();
      double prev_event = i1_;
      while (ri < r_.size()) {
        double t_inf = ii < sorted_inf.size()
                           ? sorted_inf[ii]
                           : std::numeric_limits<double>::infinity();
        if (t_inf < r_[ri]) {
          if (y == 0) {
            gap_at = prev_event;
            break;
          }
          ++y;
          prev_event = t_inf;
          ++ii;
        } else {
          if (y == 0) {
            gap_at = prev_event;
            break;
          }
          --y;
          prev_event = r_[ri];
          ++ri;
        }
      }
      if (std::isnan(gap_at)) break;
      // earliest infection strictly after the gap start
      int best = -1;
      for (std::size_t k = 0; k < inf.size(); ++k)
        if (inf[k] > gap_at &&
            (best < 0 || inf[k] < inf[static_cast<std::size_t>(best)]))
          best = static_cast<int>(k);
      if (best < 0) break;
      // place it inside the last covered stretch, clear of event ties
      double target = gap_at - 1e-7 * (1.0 + init_rng.uniform());
      if (target <= i1_) break;
      inf[static_cast<std::size_t>(best)] = target;
    }
    SirPath trial(i1_, inf, r_, population_);
    if (trial.valid()) {
      scatter_ = GpScatter(kernel_);
      roles_.clear();
      for (double t : inf) {
        scatter_.insert(t, 0.0);
        roles_.push_back(Role::Infection);
      }
      thinned_count_ = 0;
      ok = true;
    }
  }
  if (!ok)
    throw NumericalError(
        "continuous sampler: no valid starting configuration in 100 attempts");
  rebuild_path();
}

void CtsGpSampler::rebuild_path() {
  path_ = SirPath(i1_, infection_times(), r_, population_);
  if (!path_.valid())
    throw NumericalError("continuous sampler reached an impossible state");
}

std::vector<double> CtsGpSampler::infection_times() const {
  std::vector<double> out;
  out.reserve(roles_.size());
  for (std::size_t k = 0; k < roles_.size(); ++k)
    if (roles_[k] == Role::Infection)
      out.push_back(scatter_.point(static_cast<Eigen::Index>(k)));
  return out;
}

std::vector<double> CtsGpSampler::thinned_times() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(thinned_count_));
  for (std::size_t k = 0; k < roles_.size(); ++k)
    if (roles_[k] == Role::Thinned)
      out.push_back(scatter_.point(static_cast<Eigen::Index>(k)));
  return out;
}

Eigen::Index CtsGpSampler::pick_role(Role role, Eigen::Index ordinal) const {
  Eigen::Index seen = 0;
  for (std::size_t k = 0; k < roles_.size(); ++k) {
    if (roles_[k] != role) continue;
    if (seen == ordinal) return static_cast<Eigen::Index>(k);
    ++seen;
  }
  throw UsageError("pick_role: ordinal out of range");
}

double CtsGpSampler::loglik_with(double i1, const std::vector<double>& inf,
                                 const Eigen::VectorXd& g_inf,
                                 const std::vector<double>& thin,
                                 const Eigen::VectorXd& g_thin) const {
  return sir_thinned_augmented_loglik(i1, inf, g_inf, thin, g_thin, r_,
                                      population_, beta_star_, gamma_);
}

namespace {
Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = v[k];
  return out;
}
}  // namespace

double CtsGpSampler::current_loglik() const {
  std::vector<double> inf, thin;
  std::vector<double> gi, gt;
  for (std::size_t k = 0; k < roles_.size(); ++k) {
    double p = scatter_.point(static_cast<Eigen::Index>(k));
    double g = scatter_.value(static_cast<Eigen::Index>(k));
    if (roles_[k] == Role::Infection) {
      inf.push_back(p);
      gi.push_back(g);
    } else {
      thin.push_back(p);
      gt.push_back(g);
    }
  }
  return loglik_with(i1_, inf, to_vector(gi), thin, to_vector(gt));
}

void CtsGpSampler::step_gamma(Rng& rng) {
  if (options_.fix_gamma) return;
  if (options_.no_data)
    gamma_ = rng.gamma(priors_.gamma.shape, priors_.gamma.rate);
  else
    gamma_ = rng.gamma(priors_.gamma.shape + n_,
                       priors_.gamma.rate + path_.integral_y());
}

void CtsGpSampler::step_beta_star(Rng& rng) {
  if (options_.fix_beta_star) return;
  if (options_.no_data) {
    beta_star_ = rng.gamma(priors_.beta_star.shape, priors_.beta_star.rate);
    return;
  }
  double shape = priors_.beta_star.shape + static_cast<double>(n_ - 1) +
                 static_cast<double>(thinned_count_);
  beta_star_ = rng.gamma(shape, priors_.beta_star.rate + path_.integral_xy());
}

void CtsGpSampler::step_i1(Rng& rng) {
  if (options_.fix_infection_times) return;
  if (options_.no_data) {
    i1_ = r_[0] - rng.exponential(priors_.init_gap_rate);
    rebuild_path();
    return;
  }
  double upper = r_[0];
  for (std::size_t k = 0; k < roles_.size(); ++k)
    upper = std::min(upper, scatter_.point(static_cast<Eigen::Index>(k)));
  double rate = beta_star_ * (population_ - 1) + gamma_ +
                priors_.init_gap_rate;
  i1_ = upper - rng.exponential(rate);
  rebuild_path();
}

bool CtsGpSampler::step_thinned(Rng& rng) {
  ++thin_proposed_;
  const double u_type = rng.uniform();
  const double area = path_.measure_xy_positive();
  const int m = thinned_count_;
  if (u_type < 0.25) {  // birth
    if (area <= 0) return false;
    double s = path_.position_in_xy_positive(rng.uniform());
    auto [cx, cy] = path_.counts_left(s);
    auto [mean, var] = scatter_.conditional(s);
    double g = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
    double log_acc = std::log(beta_star_ * cx * cy) + std::log(area) -
                     std::log(static_cast<double>(m + 1));
    if (!options_.no_data) log_acc += log_sigmoid(-g);
    if (log_acc >= 0 || std::log(rng.uniform()) < log_acc) {
      scatter_.insert(s, g);
      roles_.push_back(Role::Thinned);
      ++thinned_count_;
      ++thin_accepted_;
      return true;
    }
    return false;
  }
  if (u_type < 0.5) {  // death
    if (m == 0) return false;
    Eigen::Index idx = pick_role(
        Role::Thinned,
        static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(m))));
    double s = scatter_.point(idx);
    double g = scatter_.value(idx);
    auto [cx, cy] = path_.counts_left(s);
    double log_acc = std::log(static_cast<double>(m)) -
                     std::log(beta_star_ * cx * cy) - std::log(area);
    if (!options_.no_data) log_acc -= log_sigmoid(-g);
    if (log_acc >= 0 || std::log(rng.uniform()) < log_acc) {
      scatter_.remove(idx);
      roles_[static_cast<std::size_t>(idx)] = roles_.back();
      roles_.pop_back();
      --thinned_count_;
      ++thin_accepted_;
      return true;
    }
    return false;
  }
  // move
  if (m == 0 || area <= 0) return false;
  Eigen::Index idx = pick_role(
      Role::Thinned,
      static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(m))));
  double s_old = scatter_.point(idx);
  double g_old = scatter_.value(idx);
  double s_new = path_.position_in_xy_positive(rng.uniform());
  auto [mean, var] = scatter_.conditional_excluding(idx, s_new);
  double g_new = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
  auto [ox, oy] = path_.counts_left(s_old);
  auto [nx, ny] = path_.counts_left(s_new);
  double log_acc = std::log(static_cast<double>(nx) * ny) -
                   std::log(static_cast<double>(ox) * oy);
  if (!options_.no_data)
    log_acc += log_sigmoid(-g_new) - log_sigmoid(-g_old);
  if (log_acc >= 0 || std::log(rng.uniform()) < log_acc) {
    scatter_.replace(idx, s_new, g_new);
    ++thin_accepted_;
    return true;
  }
  return false;
}

bool CtsGpSampler::step_infection_move(Rng& rng) {
  if (n_ < 2) return false;
  ++inf_proposed_;
  Eigen::Index idx = pick_role(
      Role::Infection,
      static_cast<Eigen::Index>(
          rng.uniform_index(static_cast<std::uint64_t>(n_ - 1))));
  double s_new = rng.uniform(i1_, r_.back());
  auto [mean, var] = scatter_.conditional_excluding(idx, s_new);
  double g_new = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();

  if (options_.no_data) {
    scatter_.replace(idx, s_new, g_new);
    ++inf_accepted_;
    return true;
  }

  std::vector<double> inf, thin, gi, gt;
  for (std::size_t k = 0; k < roles_.size(); ++k) {
    double p = scatter_.point(static_cast<Eigen::Index>(k));
    double g = scatter_.value(static_cast<Eigen::Index>(k));
    if (roles_[k] == Role::Infection) {
      inf.push_back(p);
      gi.push_back(g);
    } else {
      thin.push_back(p);
      gt.push_back(g);
    }
  }
  Eigen::VectorXd g_inf = to_vector(gi);
  Eigen::VectorXd g_thin = to_vector(gt);
  double log_old = loglik_with(i1_, inf, g_inf, thin, g_thin);

  // Locate this infection inside the role-filtered list to swap its entry.
  Eigen::Index ordinal = 0;
  for (Eigen::Index k = 0; k < idx; ++k)
    if (roles_[static_cast<std::size_t>(k)] == Role::Infection) ++ordinal;
  std::vector<double> inf_new = inf;
  Eigen::VectorXd g_inf_new = g_inf;
  inf_new[static_cast<std::size_t>(ordinal)] = s_new;
  g_inf_new[ordinal] = g_new;
  double log_new = loglik_with(i1_, inf_new, g_inf_new, thin, g_thin);

  double log_acc = log_new - log_old;
  if (log_acc >= 0 || std::log(rng.uniform()) < log_acc) {
    scatter_.replace(idx, s_new, g_new);
    rebuild_path();
    ++inf_accepted_;
    return true;
  }
  return false;
}

bool CtsGpSampler::step_g_update(Rng& rng) {
  if (options_.fix_g || !(options_.epsilon > 0) || scatter_.size() == 0)
    return false;
  ++g_proposed_;
  Eigen::VectorXd v = scatter_.prior_draw(rng);
  double keep = std::sqrt(1.0 - options_.epsilon * options_.epsilon);
  Eigen::VectorXd proposal = keep * scatter_.values() + options_.epsilon * v;
  if (options_.no_data) {
    scatter_.set_values(proposal);
    ++g_accepted_;
    return true;
  }
  double delta = 0.0;
  for (std::size_t k = 0; k < roles_.size(); ++k) {
    Eigen::Index ki = static_cast<Eigen::Index>(k);
    double sign = roles_[k] == Role::Infection ? 1.0 : -1.0;
    delta += log_sigmoid(sign * proposal[ki]) -
             log_sigmoid(sign * scatter_.values()[ki]);
  }
  if (delta >= 0 || std::log(rng.uniform()) < delta) {
    scatter_.set_values(proposal);
    ++g_accepted_;
    return true;
  }
  return false;
}

void CtsGpSampler::sweep(Rng& rng) {
  step_gamma(rng);
  step_beta_star(rng);
  step_i1(rng);
  int thin_ops = std::max(4, thinned_count_);
  for (int k = 0; k < thin_ops; ++k) step_thinned(rng);
  if (!options_.fix_infection_times) {
    int moves = options_.moves_per_sweep > 0 ? options_.moves_per_sweep : n_;
    for (int k = 0; k < moves; ++k) step_infection_move(rng);
  }
  for (int k = 0; k < options_.g_updates_per_sweep; ++k) step_g_update(rng);
}

std::int64_t CtsGpSampler::proposed(const char* move) const {
  if (std::strcmp(move, "thinned") == 0) return thin_proposed_;
  if (std::strcmp(move, "infection_move") == 0) return inf_proposed_;
  if (std::strcmp(move, "g_update") == 0) return g_proposed_;
  throw UsageError("unknown move counter");
}

std::int64_t CtsGpSampler::accepted(const char* move) const {
  if (std::strcmp(move, "thinned") == 0) return thin_accepted_;
  if (std::strcmp(move, "infection_move") == 0) return inf_accepted_;
  if (std::strcmp(move, "g_update") == 0) return g_accepted_;
  throw UsageError("unknown move counter");
}

Eigen::VectorXd CtsGpSampler::beta_on_grid(const Eigen::VectorXd& grid) const {
  Eigen::VectorXd mean = scatter_.conditional_mean(grid);
  Eigen::VectorXd beta(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k)
    beta[k] = beta_star_ * link_sigmoid(mean[k]);
  return beta;
}

ChainOutput run_cts_gp_mcmc(const RemovalData& data, const CtsGpPriors& priors,
                            const KernelParams& kernel,
                            const McmcOptions& options) {
  if (options.iterations < 1) throw ConfigError("iterations must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  CtsGpSampler sampler(data, priors, kernel, options);
  Rng rng(options.seed, 0xc75);

  const int burnin = options.resolved_burnin();
  const int retained =
      (options.iterations - burnin + options.thin - 1) / options.thin;
  if (retained < 1)
    throw ConfigError("no retained iterations; reduce burnin or thin");

  // The reporting grid is fixed once burn-in ends, spanning the burn-in
  // median of i1 through the last removal.
  const int kGridPoints = 200;
  std::vector<double> i1_burnin;
  Eigen::VectorXd grid;

  ChainOutput out;
  out.scalar_names = {"gamma", "beta_star", "M", "i1"};
  out.scalars.resize(retained, 4);
  out.seed = options.seed;
  out.iterations = options.iterations;
  out.burnin = burnin;
  out.thin = options.thin;

  Eigen::Index row = 0;
  for (int iter = 0; iter < options.iterations; ++iter) {
    sampler.sweep(rng);
    if (iter < burnin) {
      i1_burnin.push_back(sampler.i1());
      continue;
    }
    if (grid.size() == 0) {
      double lo = i1_burnin.empty() ? sampler.i1()
                                    : quantile(i1_burnin, 0.5);
      double hi = data.times.back();
      grid.resize(kGridPoints);
      for (int k = 0; k < kGridPoints; ++k)
        grid[k] = lo + (hi - lo) * static_cast<double>(k) /
                           static_cast<double>(kGridPoints - 1);
      out.days = grid;
      out.beta.resize(retained, grid.size());
    }
    if ((iter - burnin) % options.thin == 0 && row < retained) {
      out.scalars(row, 0) = sampler.gamma();
      out.scalars(row, 1) = sampler.beta_star();
      out.scalars(row, 2) = sampler.thinned_count();
      out.scalars(row, 3) = sampler.i1();
      out.beta.row(row) = sampler.beta_on_grid(grid).transpose();
      ++row;
    }
  }

  out.counters["thinned.proposed"] = sampler.proposed("thinned");
  out.counters["thinned.accepted"] = sampler.accepted("thinned");
  out.counters["infection_move.proposed"] = sampler.proposed("infection_move");
  out.counters["infection_move.accepted"] = sampler.accepted("infection_move");
  out.counters["g_update.proposed"] = sampler.proposed("g_update");
  out.counters["g_update.accepted"] = sampler.accepted("g_update");
  auto rate = [](std::int64_t acc, std::int64_t prop) {
    return prop > 0 ? static_cast<double>(acc) / static_cast<double>(prop)
                    : 0.0;
  };
  out.acceptance["thinned"] =
      rate(sampler.accepted("thinned"), sampler.proposed("thinned"));
  out.acceptance["infection_move"] = rate(sampler.accepted("infection_move"),
                                          sampler.proposed("infection_move"));
  out.acceptance["g_update"] =
      rate(sampler.accepted("g_update"), sampler.proposed("g_update"));
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

}  // namespace epinp
