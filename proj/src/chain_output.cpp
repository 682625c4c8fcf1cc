#include "epinp/chain_output.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "epinp/errors.hpp"

namespace epinp {

Eigen::VectorXd ChainOutput::scalar_trace(const std::string& name) const {
  for (std::size_t k = 0; k < scalar_names.size(); ++k)
    if (scalar_names[k] == name) return scalars.col(static_cast<Eigen::Index>(k));
  throw UsageError("no scalar trace named " + name);
}

ChainOutput merge_chains(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) throw UsageError("merge_chains: nothing to merge");
  if (chains.size() == 1) return chains.front();
  const ChainOutput& first = chains.front();

  std::set<double> day_set;
  Eigen::Index rows = 0;
  for (const ChainOutput& c : chains) {
    if (c.scalar_names != first.scalar_names)
      throw UsageError("merge_chains: scalar names differ");
    for (Eigen::Index d = 0; d < c.days.size(); ++d) day_set.insert(c.days[d]);
    rows += c.retained();
  }
  ChainOutput out;
  out.scalar_names = first.scalar_names;
  out.seed = first.seed;
  out.iterations = first.iterations;
  out.burnin = first.burnin;
  out.thin = first.thin;
  out.days = Eigen::VectorXd(static_cast<Eigen::Index>(day_set.size()));
  Eigen::Index di = 0;
  for (double d : day_set) out.days[di++] = d;
  out.scalars.resize(rows, static_cast<Eigen::Index>(first.scalar_names.size()));
  out.beta.setConstant(rows, out.days.size(),
                       std::numeric_limits<double>::quiet_NaN());
  Eigen::Index row = 0;
  out.chains = 0;
  for (const ChainOutput& c : chains) {
    out.scalars.middleRows(row, c.retained()) = c.scalars;
    for (Eigen::Index d = 0; d < c.days.size(); ++d) {
      Eigen::Index target =
          std::lower_bound(out.days.data(), out.days.data() + out.days.size(),
                           c.days[d]) -
          out.days.data();
      out.beta.col(target).segment(row, c.retained()) = c.beta.col(d);
    }
    row += c.retained();
    out.chains += c.chains;
    out.wall_seconds += c.wall_seconds;
    for (const auto& [k, v] : c.counters) out.counters[k] += v;
  }
  // Acceptance rates pooled via the underlying counters when present,
  // otherwise averaged over the chains that report the move.
  std::set<std::string> move_names;
  for (const ChainOutput& c : chains)
    for (const auto& [k, v] : c.acceptance) move_names.insert(k);
  for (const std::string& k : move_names) {
    double num = 0, den = 0, sum = 0;
    int reported = 0;
    bool have_counts = true;
    for (const ChainOutput& c : chains) {
      auto it = c.acceptance.find(k);
      if (it == c.acceptance.end()) continue;
      sum += it->second;
      ++reported;
      auto asks = c.counters.find(k + ".proposed");
      auto acc = c.counters.find(k + ".accepted");
      if (asks == c.counters.end() || acc == c.counters.end())
        have_counts = false;
      else {
        num += static_cast<double>(acc->second);
        den += static_cast<double>(asks->second);
      }
    }
    if (have_counts && den > 0)
      out.acceptance[k] = num / den;
    else if (reported > 0)
      out.acceptance[k] = sum / reported;
  }
  return out;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw UsageError("quantile of an empty sample");
  if (!(p >= 0.0) || !(p <= 1.0)) throw UsageError("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 1) return values[0];
  double h = p * static_cast<double>(n - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo >= n - 1) return values[n - 1];
  double w = h - static_cast<double>(lo);
  return values[lo] * (1.0 - w) + values[lo + 1] * w;
}

double effective_sample_size(const Eigen::VectorXd& trace) {
  const Eigen::Index n = trace.size();
  if (n < 4) return static_cast<double>(n);
  double mean = trace.mean();
  Eigen::VectorXd centered = trace.array() - mean;
  double c0 = centered.squaredNorm() / static_cast<double>(n);
  if (c0 <= 0) return static_cast<double>(n);

  auto rho = [&](Eigen::Index lag) {
    if (lag == 0) return 1.0;
    double s = 0;
    for (Eigen::Index t = 0; t + lag < n; ++t)
      s += centered[t] * centered[t + lag];
    return s / (static_cast<double>(n) * c0);
  };

  // Geyer initial monotone positive sequence: tau = 2 sum_m Gamma_m - 1 with
  // Gamma_m = rho(2m) + rho(2m+1), truncated at the first non-positive pair.
  double pair_sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; 2 * m + 1 < n; ++m) {
    double pair = rho(2 * m) + rho(2 * m + 1);
    if (pair <= 0) break;
    pair = std::min(pair, prev_pair);
    pair_sum += pair;
    prev_pair = pair;
  }
  double tau = std::max(1.0, 2.0 * pair_sum - 1.0);
  return static_cast<double>(n) / tau;
}

PosteriorSummary summarize(const ChainOutput& chain, double level) {
  if (chain.retained() == 0) throw UsageError("summarize: empty chain");
  if (!(level > 0) || !(level < 1)) throw UsageError("bad credible level");
  PosteriorSummary s;
  s.level = level;
  const double tail = (1.0 - level) / 2.0;

  std::vector<Eigen::Index> kept;
  for (Eigen::Index d = 0; d < chain.days.size(); ++d) {
    bool any = false;
    for (Eigen::Index r = 0; r < chain.beta.rows(); ++r)
      if (!std::isnan(chain.beta(r, d))) {
        any = true;
        break;
      }
    if (any) kept.push_back(d);
  }
  const Eigen::Index nd = static_cast<Eigen::Index>(kept.size());
  s.days.resize(nd);
  s.median.resize(nd);
  s.mean.resize(nd);
  s.lo.resize(nd);
  s.hi.resize(nd);
  s.ess.resize(nd);
  s.n_present.resize(nd);
  for (Eigen::Index k = 0; k < nd; ++k) {
    Eigen::Index d = kept[static_cast<std::size_t>(k)];
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(chain.beta.rows()));
    for (Eigen::Index r = 0; r < chain.beta.rows(); ++r)
      if (!std::isnan(chain.beta(r, d))) vals.push_back(chain.beta(r, d));
    s.days[k] = chain.days[d];
    s.n_present[k] = static_cast<int>(vals.size());
    double total = 0;
    for (double v : vals) total += v;
    s.mean[k] = total / static_cast<double>(vals.size());
    s.median[k] = quantile(vals, 0.5);
    s.lo[k] = quantile(vals, tail);
    s.hi[k] = quantile(vals, 1.0 - tail);
    Eigen::VectorXd t(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t j = 0; j < vals.size(); ++j)
      t[static_cast<Eigen::Index>(j)] = vals[j];
    s.ess[k] = effective_sample_size(t);
  }

  for (std::size_t c = 0; c < chain.scalar_names.size(); ++c) {
    Eigen::VectorXd t = chain.scalars.col(static_cast<Eigen::Index>(c));
    std::vector<double> vals(t.data(), t.data() + t.size());
    PosteriorSummary::ScalarStats st;
    st.median = quantile(vals, 0.5);
    st.lo = quantile(vals, tail);
    st.hi = quantile(vals, 1.0 - tail);
    st.mean = t.mean();
    st.ess = effective_sample_size(t);
    s.scalars[chain.scalar_names[c]] = st;
  }
  return s;
}

}  // namespace epinp
