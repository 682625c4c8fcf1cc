#include <doctest.h>

#include <cmath>
#include <vector>

#include "epinp/gp.hpp"
#include "epinp/simulate.hpp"
#include "support/stats.hpp"

using namespace epinp;

namespace {

Eigen::VectorXd linspace(double a, double b, int n) {
  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k)
    v[k] = a + (b - a) * static_cast<double>(k) / (n - 1);
  return v;
}

}  // namespace

TEST_CASE("squared-exponential kernel values") {
  KernelParams p{10.0, 6.0};
  CHECK(squared_exp_kernel(3.0, 3.0, p) == 10.0);
  CHECK(squared_exp_kernel(0.0, 6.0, p) ==
        doctest::Approx(10.0 * std::exp(-0.5)).epsilon(1e-12));
  CHECK(squared_exp_kernel(0.0, 1e6, p) == 0.0);
}

TEST_CASE("kernel matrix is bitwise symmetric and factors with tiny jitter") {
  KernelParams p{2.0, 3.0};
  Eigen::VectorXd grid = linspace(0, 40, 41);
  Eigen::MatrixXd k = kernel_matrix(grid, p);
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    CHECK(k(i, i) == 2.0);
    for (Eigen::Index j = 0; j < k.cols(); ++j) REQUIRE(k(i, j) == k(j, i));
  }
  JitteredCholesky c = jittered_cholesky(k, p.omega);
  CHECK(c.jitter <= 1e-6 * p.omega);
  Eigen::MatrixXd rebuilt = c.lower * c.lower.transpose();
  rebuilt.diagonal().array() -= c.jitter;
  CHECK((rebuilt - k).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("single grid point prior is Normal(0, omega)") {
  KernelParams p{4.0, 2.0};
  Eigen::VectorXd grid(1);
  grid << 0.0;
  std::vector<double> draws(30000);
  Rng rng(3);
  for (double& d : draws) {
    GpField f = sample_gp_prior(grid, p, rng);
    d = f.values()[0];
  }
  CHECK(teststat::ks_p_value(draws, [&](double x) {
          return teststat::normal_cdf(x / 2.0);
        }) > 0.001);
}

TEST_CASE("prior sample covariance matches the kernel") {
  KernelParams p{3.0, 2.5};
  Eigen::VectorXd grid = linspace(0, 8, 5);
  Eigen::MatrixXd k = kernel_matrix(grid, p);
  const int n = 10000;
  Eigen::MatrixXd draws(n, 5);
  Rng rng(7);
  for (int r = 0; r < n; ++r)
    draws.row(r) = sample_gp_prior(grid, p, rng).values().transpose();
  Eigen::MatrixXd centered = draws.rowwise() - draws.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1.0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(std::abs(cov(i, j) - k(i, j)) < 0.05 * p.omega);
}

TEST_CASE("fixed seed gives an identical field") {
  KernelParams p{1.0, 1.0};
  Eigen::VectorXd grid = linspace(0, 4, 5);
  Rng a(11), b(11);
  GpField fa = sample_gp_prior(grid, p, a);
  GpField fb = sample_gp_prior(grid, p, b);
  CHECK(fa.values() == fb.values());
}

TEST_CASE("conditional extension far from the grid reverts to the prior") {
  KernelParams p{4.0, 1.0};
  Eigen::VectorXd grid = linspace(0, 3, 4);
  Rng rng(5);
  GpField f = sample_gp_prior(grid, p, rng);
  Eigen::VectorXd probe(1);
  probe << 100.0;
  auto [mean, cov] = gp_conditional_moments(f, probe);
  CHECK(std::abs(mean[0]) < 1e-8);
  CHECK(cov(0, 0) == doctest::Approx(p.omega).epsilon(1e-6));

  double acc = 0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    GpField g = gp_conditional_extend(f, probe, rng);
    acc += g.values()[g.size() - 1];
  }
  CHECK(std::abs(acc / n) < 0.01 * std::sqrt(p.omega) + 3 * 2.0 / std::sqrt(n));
}

TEST_CASE("conditional variance collapses at a coincident point") {
  KernelParams p{4.0, 1.5};
  Eigen::VectorXd grid = linspace(0, 3, 4);
  Rng rng(9);
  GpField f = sample_gp_prior(grid, p, rng);
  Eigen::VectorXd probe(1);
  probe << 1.0 + 1e-13;
  auto [mean, cov] = gp_conditional_moments(f, probe);
  CHECK(cov(0, 0) < f.jitter() * 10);
  CHECK(mean[0] == doctest::Approx(f.values()[1]).epsilon(1e-5));
}

TEST_CASE("extend then restrict keeps original values bit-identical") {
  KernelParams p{2.0, 2.0};
  Eigen::VectorXd grid = linspace(0, 6, 7);
  Rng rng(13);
  GpField f = sample_gp_prior(grid, p, rng);
  Eigen::VectorXd extra(2);
  extra << -2.0, -1.0;
  GpField g = gp_conditional_extend(f, extra, rng);
  REQUIRE(g.size() == 9);
  GpField back = gp_restrict(g, 2, 7);
  for (int k = 0; k < 7; ++k) {
    CHECK(back.grid()[k] == f.grid()[k]);
    CHECK(back.values()[k] == f.values()[k]);
  }
}

TEST_CASE("joint extension equals sequential extension in moments") {
  KernelParams p{3.0, 2.0};
  Eigen::VectorXd grid = linspace(0, 5, 6);
  Rng rng(17);
  GpField f = sample_gp_prior(grid, p, rng);
  Eigen::VectorXd ab(2);
  ab << 7.3, 9.1;
  auto [mean_joint, cov_joint] = gp_conditional_moments(f, ab);

  // Sequential: condition on a first, propagate through b | (grid, a).
  Eigen::VectorXd a(1), b(1);
  a << 7.3;
  b << 9.1;
  auto [mean_a, cov_a] = gp_conditional_moments(f, a);
  // b given grid and a: extend the field by a with an arbitrary value and
  // read the linear coefficients by probing two values of g(a).
  GpField fa0 = gp_conditional_extend(f, a, rng);
  Eigen::VectorXd vals = fa0.values();
  Eigen::Index a_idx = 6;  // appended beyond the original grid
  REQUIRE(fa0.grid()[a_idx] == 7.3);

  auto moments_b_given = [&](double ga) {
    Eigen::VectorXd v = vals;
    v[a_idx] = ga;
    GpField fa = fa0.with_values(v);
    return gp_conditional_moments(fa, b);
  };
  auto [m0, c0] = moments_b_given(0.0);
  auto [m1, c1] = moments_b_given(1.0);
  double slope = m1[0] - m0[0];  // d E[b]/d g(a)
  // law of total expectation / variance
  double mean_b_seq = m0[0] + slope * mean_a[0];
  double var_b_seq = c0(0, 0) + slope * slope * cov_a(0, 0);
  double cov_ab_seq = slope * cov_a(0, 0);

  CHECK(std::abs(mean_b_seq - mean_joint[1]) < 1e-10);
  CHECK(std::abs(var_b_seq - cov_joint(1, 1)) < 1e-10);
  CHECK(std::abs(cov_ab_seq - cov_joint(0, 1)) < 1e-10);
  CHECK(std::abs(mean_a[0] - mean_joint[0]) < 1e-10);
  CHECK(std::abs(cov_a(0, 0) - cov_joint(0, 0)) < 1e-10);
}

TEST_CASE("under-relaxed proposal limits") {
  KernelParams p{2.0, 1.0};
  Eigen::VectorXd grid = linspace(0, 3, 4);
  Rng rng(19);
  GpField f = sample_gp_prior(grid, p, rng);
  GpField tiny = underrelaxed_proposal(f, 1e-12, rng);
  CHECK((tiny.values() - f.values()).cwiseAbs().maxCoeff() < 1e-5);
  CHECK_THROWS_AS(underrelaxed_proposal(f, 1.5, rng), UsageError);
  // epsilon = 1 is an independent prior draw: uncorrelated with f
  GpField indep = underrelaxed_proposal(f, 1.0, rng);
  CHECK(indep.values() != f.values());
}

TEST_CASE("under-relaxed proposal preserves the prior (KS after 50 steps)") {
  KernelParams p{5.0, 2.0};
  Eigen::VectorXd grid = linspace(0, 4, 3);
  Rng rng(23);
  std::vector<double> coord(10000);
  for (double& c : coord) {
    GpField f = sample_gp_prior(grid, p, rng);
    for (int k = 0; k < 50; ++k) f = underrelaxed_proposal(f, 0.2, rng);
    c = f.values()[0];
  }
  CHECK(teststat::ks_p_value(coord, [&](double x) {
          return teststat::normal_cdf(x / std::sqrt(p.omega));
        }) > 0.01);
  CHECK(teststat::variance_z_score(coord, p.omega) < 4.0);
}

TEST_CASE("links") {
  CHECK(link_sigmoid(0.0) == 0.5);
  CHECK(link_exp(0.0) == 1.0);
  Rng rng(29);
  for (int k = 0; k < 100; ++k) {
    double z = rng.uniform(-40, 40);
    CHECK(link_sigmoid(z) + link_sigmoid(-z) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(log_sigmoid(z) <= 0.0);
  }
  CHECK(link_sigmoid(1000.0) == 1.0);
  CHECK(link_sigmoid(-1000.0) == 0.0);
}

TEST_CASE("field log prior matches the dense normal density") {
  KernelParams p{2.0, 1.7};
  Eigen::VectorXd grid = linspace(0, 4, 5);
  Rng rng(31);
  GpField f = sample_gp_prior(grid, p, rng);
  Eigen::MatrixXd k = kernel_matrix(grid, p);
  k.diagonal().array() += f.jitter();
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  Eigen::VectorXd w = llt.matrixL().solve(f.values());
  double log_det = 0;
  for (int i = 0; i < 5; ++i) log_det += std::log(llt.matrixL()(i, i));
  double expect = -0.5 * w.squaredNorm() - log_det -
                  0.5 * 5 * std::log(2 * 3.14159265358979323846);
  CHECK(f.log_prior() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("scatter conditionals agree with dense formulas") {
  KernelParams p{3.0, 1.2};
  GpScatter sc(p);
  Rng rng(37);
  std::vector<double> pts = {0.4, 2.9, 1.3, 5.0, 3.7};
  for (double t : pts) sc.insert(t, rng.normal());

  // dense reference including the same jitter
  Eigen::VectorXd pv = sc.points();
  Eigen::MatrixXd k = kernel_matrix(pv, p);
  k.diagonal().array() += sc.jitter();
  Eigen::MatrixXd kinv = k.inverse();

  double t = 2.0;
  Eigen::VectorXd kx(5);
  for (int i = 0; i < 5; ++i) kx[i] = squared_exp_kernel(pv[i], t, p);
  double mean_ref = kx.dot(kinv * sc.values());
  double var_ref = p.omega + sc.jitter() - kx.dot(kinv * kx);
  auto [mean, var] = sc.conditional(t);
  CHECK(mean == doctest::Approx(mean_ref).epsilon(1e-9));
  CHECK(var == doctest::Approx(var_ref).epsilon(1e-7));

  // excluding one point must equal conditioning on the dense subset
  for (Eigen::Index drop = 0; drop < 5; ++drop) {
    Eigen::VectorXd sub_pts(4), sub_vals(4);
    Eigen::Index w2 = 0;
    for (Eigen::Index i = 0; i < 5; ++i) {
      if (i == drop) continue;
      sub_pts[w2] = pv[i];
      sub_vals[w2] = sc.values()[i];
      ++w2;
    }
    Eigen::MatrixXd ks = kernel_matrix(sub_pts, p);
    ks.diagonal().array() += sc.jitter();
    Eigen::MatrixXd ks_inv = ks.inverse();
    Eigen::VectorXd kxs(4);
    for (int i = 0; i < 4; ++i) kxs[i] = squared_exp_kernel(sub_pts[i], t, p);
    double mean_sub = kxs.dot(ks_inv * sub_vals);
    double var_sub = p.omega + sc.jitter() - kxs.dot(ks_inv * kxs);
    auto [m, v] = sc.conditional_excluding(drop, t);
    CHECK(m == doctest::Approx(mean_sub).epsilon(1e-8));
    CHECK(v == doctest::Approx(var_sub).epsilon(1e-6));
  }
}

TEST_CASE("field-backed rate functions") {
  KernelParams p{1.0, 2.0};
  Eigen::VectorXd grid = linspace(0, 4, 5);
  Rng rng(41);
  GpField f = sample_gp_prior(grid, p, rng);

  RateFunction exp_rate = exp_rate_from_field(f);
  CHECK(exp_rate(2.0) == doctest::Approx(std::exp(f.values()[2])));
  CHECK(exp_rate.sup() == doctest::Approx(std::exp(f.values().maxCoeff())));

  RateFunction sig_rate = sigmoid_rate_from_field(f, 2.5);
  CHECK(sig_rate.sup() == 2.5);
  // at a grid point the conditional mean interpolates the value
  CHECK(sig_rate(3.0) ==
        doctest::Approx(2.5 * link_sigmoid(f.values()[3])).epsilon(1e-6));
  CHECK(sig_rate(100.0) == doctest::Approx(2.5 * 0.5).epsilon(1e-6));
  // bounded rates drive the thinning simulator directly
  EpidemicEvents epi = simulate_continuous(12, sig_rate, 1.0, 5);
  CHECK(epi.final_size() >= 1);
}

TEST_CASE("scatter structural edits keep values straight") {
  KernelParams p{1.0, 1.0};
  GpScatter sc(p);
  sc.insert(0.0, 1.5);
  sc.insert(2.0, -0.5);
  sc.insert(4.0, 0.25);
  sc.remove(0);  // swap-remove: last point moves into slot 0
  CHECK(sc.size() == 2);
  CHECK(sc.point(0) == 4.0);
  CHECK(sc.value(0) == 0.25);
  CHECK(sc.point(1) == 2.0);
  sc.replace(1, 2.5, 0.75);
  CHECK(sc.point(1) == 2.5);
  CHECK(sc.value(1) == 0.75);
}
