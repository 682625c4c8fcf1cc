#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "epinp/chain_output.hpp"
#include "epinp/rng.hpp"
#include "support/stats.hpp"

using namespace epinp;

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

ChainOutput tiny_chain(const Eigen::MatrixXd& beta, Eigen::VectorXd days) {
  ChainOutput c;
  c.scalar_names = {"gamma"};
  c.scalars = Eigen::MatrixXd::Constant(beta.rows(), 1, 0.5);
  c.days = std::move(days);
  c.beta = beta;
  c.iterations = static_cast<int>(beta.rows());
  c.thin = 1;
  return c;
}
}  // namespace

TEST_CASE("quantile: order statistics with linear interpolation") {
  std::vector<double> v = {4.0, 1.0, 3.0, 2.0};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(v, 1.0 / 3.0) == doctest::Approx(2.0));
  CHECK(quantile({7.5}, 0.3) == 7.5);
}

TEST_CASE("constant trace gives a zero-width interval") {
  Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(100, 1, 0.42);
  PosteriorSummary s = summarize(tiny_chain(beta, Eigen::VectorXd::Ones(1)));
  CHECK(s.lo[0] == 0.42);
  CHECK(s.hi[0] == 0.42);
  CHECK(s.median[0] == 0.42);
}

TEST_CASE("uniform trace recovers the right 95% interval") {
  Rng rng(17);
  Eigen::MatrixXd beta(10000, 1);
  for (int k = 0; k < 10000; ++k) beta(k, 0) = rng.uniform();
  PosteriorSummary s = summarize(tiny_chain(beta, Eigen::VectorXd::Zero(1)));
  CHECK(std::abs(s.lo[0] - 0.025) < 0.01);
  CHECK(std::abs(s.hi[0] - 0.975) < 0.01);
  CHECK(std::abs(s.median[0] - 0.5) < 0.02);
  CHECK(s.lo[0] <= s.median[0]);
  CHECK(s.median[0] <= s.hi[0]);
}

TEST_CASE("ESS of an iid trace is close to its length") {
  Rng rng(23);
  Eigen::VectorXd trace(10000);
  for (int k = 0; k < 10000; ++k) trace[k] = rng.normal();
  double ess = effective_sample_size(trace);
  CHECK(ess > 0.9 * 10000);
  CHECK(ess <= 10000.0);
}

TEST_CASE("ESS shrinks for a strongly correlated chain") {
  Rng rng(29);
  const double phi = 0.95;
  Eigen::VectorXd trace(20000);
  trace[0] = rng.normal();
  for (int k = 1; k < 20000; ++k)
    trace[k] = phi * trace[k - 1] + std::sqrt(1 - phi * phi) * rng.normal();
  double ess = effective_sample_size(trace);
  // theoretical tau = (1+phi)/(1-phi) = 39
  CHECK(ess < 20000 / 20.0);
  CHECK(ess > 20000 / 120.0);
}

TEST_CASE("missing days are excluded per day and empty days dropped") {
  Eigen::MatrixXd beta(4, 3);
  beta << 1.0, kNaN, kNaN,
          2.0, kNaN, kNaN,
          3.0, 5.0, kNaN,
          4.0, 7.0, kNaN;
  Eigen::VectorXd days(3);
  days << 10, 11, 12;
  PosteriorSummary s = summarize(tiny_chain(beta, days));
  REQUIRE(s.days.size() == 2);  // day 12 has no samples at all
  CHECK(s.days[0] == 10);
  CHECK(s.days[1] == 11);
  CHECK(s.n_present[0] == 4);
  CHECK(s.n_present[1] == 2);
  CHECK(s.mean[1] == doctest::Approx(6.0));
}

TEST_CASE("merging chains unions day grids and pads with missing") {
  ChainOutput a = tiny_chain(Eigen::MatrixXd::Constant(3, 1, 1.0),
                             Eigen::VectorXd::Constant(1, 5.0));
  ChainOutput b = tiny_chain(Eigen::MatrixXd::Constant(2, 1, 2.0),
                             Eigen::VectorXd::Constant(1, 6.0));
  a.acceptance["infection_move"] = 0.5;
  b.acceptance["infection_move"] = 0.7;
  ChainOutput merged = merge_chains({a, b});
  REQUIRE(merged.days.size() == 2);
  REQUIRE(merged.retained() == 5);
  CHECK(merged.beta(0, 0) == 1.0);
  CHECK(std::isnan(merged.beta(0, 1)));
  CHECK(std::isnan(merged.beta(3, 0)));
  CHECK(merged.beta(3, 1) == 2.0);
  CHECK(merged.chains == 2);

  // associativity on the beta grid
  ChainOutput c = tiny_chain(Eigen::MatrixXd::Constant(1, 1, 3.0),
                             Eigen::VectorXd::Constant(1, 5.5));
  ChainOutput left = merge_chains({merge_chains({a, b}), c});
  ChainOutput right = merge_chains({a, merge_chains({b, c})});
  CHECK(left.days == right.days);
  CHECK(left.retained() == right.retained());
}

TEST_CASE("scalar summaries carry ESS bounded by the sample count") {
  Rng rng(31);
  ChainOutput c;
  c.scalar_names = {"gamma"};
  c.scalars.resize(5000, 1);
  for (int k = 0; k < 5000; ++k) c.scalars(k, 0) = rng.uniform();
  c.days = Eigen::VectorXd();
  c.beta = Eigen::MatrixXd(5000, 0);
  PosteriorSummary s = summarize(c);
  const auto& g = s.scalars.at("gamma");
  CHECK(g.ess <= 5000.0);
  CHECK(g.ess > 4000.0);
  CHECK(g.lo <= g.median);
  CHECK(g.median <= g.hi);
}
