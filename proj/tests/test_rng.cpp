#include <doctest.h>

#include <cmath>
#include <vector>

#include "epinp/rng.hpp"
#include "support/stats.hpp"

using epinp::Rng;

TEST_CASE("identical seed and stream replay bit-identically") {
  Rng a(42, 7), b(42, 7);
  for (int k = 0; k < 1000; ++k) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different streams decorrelate") {
  Rng a(42, 0), b(42, 1);
  int equal = 0;
  for (int k = 0; k < 1000; ++k)
    if (a.next_u64() == b.next_u64()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("split produces a reproducible independent child") {
  Rng parent(9, 0);
  Rng c1 = parent.split(3);
  Rng c2 = parent.split(3);
  CHECK(c1.next_u64() == c2.next_u64());
  Rng c3 = parent.split(4);
  CHECK(c1.next_u64() != c3.next_u64());
}

TEST_CASE("uniform stays inside the open unit interval") {
  Rng rng(1);
  for (int k = 0; k < 100000; ++k) {
    double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("uniform_index is unbiased over a small range") {
  Rng rng(5);
  std::vector<double> counts(7, 0.0);
  const int n = 140000;
  for (int k = 0; k < n; ++k) counts[rng.uniform_index(7)] += 1.0;
  std::vector<double> probs(7, 1.0 / 7.0);
  CHECK(teststat::chi_square_gof_p(counts, probs, n) > 0.001);
}

TEST_CASE("normal draws match the standard normal") {
  Rng rng(11);
  std::vector<double> z(50000);
  for (double& v : z) v = rng.normal();
  CHECK(teststat::mean_z_score(z, 0.0) < 4.0);
  CHECK(teststat::variance_z_score(z, 1.0) < 4.0);
  CHECK(teststat::ks_p_value(z, [](double x) {
          return teststat::normal_cdf(x);
        }) > 0.001);
}

TEST_CASE("gamma sampler matches its distribution") {
  Rng rng(13);
  for (double shape : {0.5, 1.0, 2.5, 7.0}) {
    for (double rate : {0.5, 3.0}) {
      std::vector<double> x(40000);
      for (double& v : x) v = rng.gamma(shape, rate);
      CHECK(teststat::mean_z_score(x, shape / rate) < 4.5);
      CHECK(teststat::ks_p_value(x, [&](double v) {
              return teststat::gamma_cdf(v, shape, rate);
            }) > 0.001);
    }
  }
}

TEST_CASE("beta sampler matches its distribution") {
  Rng rng(17);
  std::vector<double> x(40000);
  for (double& v : x) v = rng.beta(3.0, 2.0);
  CHECK(teststat::mean_z_score(x, 0.6) < 4.0);
  CHECK(teststat::ks_p_value(x, [](double v) {
          return teststat::beta_cdf(v, 3.0, 2.0);
        }) > 0.001);
}

TEST_CASE("geometric support starts at one with the right pmf") {
  Rng rng(19);
  const double p = 0.3;
  std::vector<double> counts(12, 0.0);
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    long long g = rng.geometric(p);
    REQUIRE(g >= 1);
    if (g <= 12) counts[static_cast<std::size_t>(g - 1)] += 1.0;
  }
  std::vector<double> probs(12);
  for (int k = 1; k <= 12; ++k)
    probs[static_cast<std::size_t>(k - 1)] = p * std::pow(1 - p, k - 1);
  CHECK(teststat::chi_square_gof_p(counts, probs, n) > 0.001);
  Rng degenerate(1);
  CHECK(degenerate.geometric(1.0) == 1);
}

TEST_CASE("exponential mean matches") {
  Rng rng(23);
  std::vector<double> x(40000);
  for (double& v : x) v = rng.exponential(2.5);
  CHECK(teststat::mean_z_score(x, 1.0 / 2.5) < 4.0);
}

TEST_CASE("binomial matches its pmf") {
  Rng rng(29);
  const int trials = 10;
  const double p = 0.35;
  std::vector<double> counts(trials + 1, 0.0);
  const int n = 100000;
  for (int k = 0; k < n; ++k)
    counts[static_cast<std::size_t>(rng.binomial(trials, p))] += 1.0;
  std::vector<double> probs(trials + 1);
  for (int c = 0; c <= trials; ++c) {
    double log_choose = std::lgamma(trials + 1.0) - std::lgamma(c + 1.0) -
                        std::lgamma(trials - c + 1.0);
    probs[static_cast<std::size_t>(c)] =
        std::exp(log_choose + c * std::log(p) + (trials - c) * std::log1p(-p));
  }
  CHECK(teststat::chi_square_gof_p(counts, probs, n) > 0.001);
}
