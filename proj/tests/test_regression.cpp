#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "rfq/regression.hpp"
#include "rfq/rng.hpp"

using namespace rfq;

namespace {

RegressionProblem make_problem(const Eigen::MatrixXd& x,
                               const Eigen::VectorXd& y,
                               bool standardized = false) {
  return RegressionProblem{x, y, standardized};
}

// Random dense problem with a sparse truth; the workhorse generator for the
// property tests.
RegressionProblem random_problem(Rng& rng, int n, int p, double noise_sd,
                                 int sparsity) {
  Eigen::MatrixXd x = rng.normal_matrix(n, p);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int k = 0; k < sparsity; ++k)
    beta[static_cast<int>(rng.uniform() * p)] = rng.uniform(-2.0, 2.0);
  Eigen::VectorXd y = x * beta + noise_sd * rng.normal_vector(n);
  return make_problem(x, y);
}

// Reference OLS through a pivoted QR, independent of the coordinate-descent
// path under test.
Eigen::VectorXd qr_ols(const RegressionProblem& problem) {
  return problem.design.colPivHouseholderQr().solve(problem.response);
}

}  // namespace

TEST_CASE("standardize: two-point column") {
  Eigen::MatrixXd x(2, 1);
  x << 1, 3;
  Eigen::VectorXd y(2);
  y << 0, 0;
  auto [std_problem, stats] = standardize(make_problem(x, y));
  CHECK(std_problem.standardized);
  CHECK(stats.column_means[0] == doctest::Approx(2.0));
  CHECK(stats.column_sds[0] == doctest::Approx(1.0));
  CHECK(std_problem.design(0, 0) == doctest::Approx(-1.0));
  CHECK(std_problem.design(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("standardize: constant column rejected") {
  Eigen::MatrixXd x(3, 1);
  x << 5, 5, 5;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(standardize(make_problem(x, y)), ConstantColumn);
}

TEST_CASE("standardize: proportional columns, hand-computed values") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 2, 2, 4, 3, 6;
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  auto [std_problem, stats] = standardize(make_problem(x, y));
  const double v = std::sqrt(1.5);
  for (int j = 0; j < 2; ++j) {
    CHECK(std_problem.design(0, j) == doctest::Approx(-v));
    CHECK(std_problem.design(1, j) == doctest::Approx(0.0));
    CHECK(std_problem.design(2, j) == doctest::Approx(v));
  }
  CHECK(stats.response_mean == doctest::Approx(2.0));
  CHECK(std_problem.response.sum() == doctest::Approx(0.0));
}

TEST_CASE("standardize: stats reproduce the standardized design bit-for-bit") {
  Rng rng(7);
  const Eigen::MatrixXd x = rng.normal_matrix(20, 4);
  const Eigen::VectorXd y = rng.normal_vector(20);
  auto [std_problem, stats] = standardize(make_problem(x, y));
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 4; ++j) {
      const double recomputed =
          (x(i, j) - stats.column_means[j]) / stats.column_sds[j];
      CHECK(recomputed == std_problem.design(i, j));  // exact
    }
}

TEST_CASE("standardize: non-finite input rejected") {
  Eigen::MatrixXd x(2, 1);
  x << 1, std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(standardize(make_problem(x, y)), NonFiniteInput);
}

TEST_CASE("soft_threshold closed forms") {
  CHECK(soft_threshold(0.5, 0.2) == doctest::Approx(0.3));
  CHECK(soft_threshold(-0.1, 0.2) == 0.0);
  CHECK(soft_threshold(0.2, 0.2) == 0.0);
  CHECK(soft_threshold(-0.7, 0.2) == doctest::Approx(-0.5));
}

TEST_CASE("lasso_fit: univariate soft-threshold closed form") {
  // standardized x = [1, -1]; y chosen so x^T y / n = 0.5
  Eigen::MatrixXd x(2, 1);
  x << 1, -1;
  Eigen::VectorXd y(2);
  y << 0.5, -0.5;
  const LassoFit fit = lasso_fit(make_problem(x, y, true), 0.2);
  CHECK(fit.coefficients[0] == doctest::Approx(0.3));
  CHECK(fit.kkt_violation <= 1e-8);
}

TEST_CASE("lasso_fit: zero penalty equals OLS") {
  Rng rng(11);
  auto problem = random_problem(rng, 60, 6, 0.5, 3);
  auto [std_problem, stats] = standardize(problem);
  const LassoFit fit = lasso_fit(std_problem, 0.0);
  const Eigen::VectorXd ols = qr_ols(std_problem);
  CHECK((fit.coefficients - ols).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("lasso_fit: penalty above max correlation zeroes everything") {
  Rng rng(13);
  auto problem = random_problem(rng, 50, 8, 1.0, 2);
  auto [std_problem, stats] = standardize(problem);
  const double max_corr =
      (std_problem.design.transpose() * std_problem.response / 50.0)
          .cwiseAbs()
          .maxCoeff();
  const LassoFit fit = lasso_fit(std_problem, max_corr * 1.01);
  CHECK(fit.coefficients.isZero(0.0));
  CHECK(verify_kkt(std_problem, fit) == 0.0);
}

TEST_CASE("lasso_fit: DidNotConverge carries the partial fit") {
  Rng rng(17);
  auto problem = random_problem(rng, 80, 10, 0.2, 5);
  auto [std_problem, stats] = standardize(problem);
  try {
    lasso_fit(std_problem, 0.01, 1e-14, 1);
    FAIL("expected DidNotConverge");
  } catch (const DidNotConverge& e) {
    CHECK(e.partial.iterations == 1);
    CHECK(e.partial.max_coef_delta_at_exit > 1e-14);
    CHECK(e.partial.coefficients.size() == 10);
  }
}

TEST_CASE("verify_kkt: OLS fit at zero penalty certifies to zero") {
  Rng rng(19);
  auto problem = random_problem(rng, 40, 5, 0.3, 2);
  auto [std_problem, stats] = standardize(problem);
  LassoFit fit;
  fit.penalty = 0.0;
  fit.coefficients = qr_ols(std_problem);
  CHECK(verify_kkt(std_problem, fit) <= 1e-8);
}

TEST_CASE("threshold_support: strict absolute-value filtering") {
  LassoFit fit;
  fit.coefficients.resize(3);
  fit.coefficients << 0.5, -0.3, 0.1;
  CHECK(threshold_support(fit, 0.2).indices == std::vector<int>{0, 1});
  CHECK(threshold_support(fit, 0.0).indices == std::vector<int>{0, 1, 2});

  LassoFit boundary;
  boundary.coefficients.resize(1);
  boundary.coefficients << 0.2;
  CHECK(threshold_support(boundary, 0.2).empty());
}

TEST_CASE("ols_restricted: noiseless recovery on the true support") {
  Rng rng(23);
  Eigen::MatrixXd x = rng.normal_matrix(30, 6);
  Eigen::VectorXd y = 1.5 * x.col(1) - 2.0 * x.col(4);
  SupportSet support{{1, 4}};
  const OlsFit fit = ols_restricted(make_problem(x, y), support);
  CHECK(fit.coefficients_on_support[0] == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(fit.coefficients_on_support[1] == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(fit.residual_variance <= 1e-16 * y.squaredNorm());
}

TEST_CASE("ols_restricted: empty support returns the zero fit") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 0, 0, 1, -1, 0, 0, -1;
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  const OlsFit fit = ols_restricted(make_problem(x, y), SupportSet{});
  CHECK(fit.coefficients_on_support.size() == 0);
  CHECK(fit.residual_variance == doctest::Approx(y.squaredNorm() / 4.0));
  CHECK(fit.embedded(2).isZero(0.0));
}

TEST_CASE("ols_restricted: hand normal equation") {
  Eigen::MatrixXd x(2, 1);
  x << 1, -1;
  Eigen::VectorXd y(2);
  y << 2, -2;
  const OlsFit fit =
      ols_restricted(make_problem(x, y, true), SupportSet{{0}});
  CHECK(fit.coefficients_on_support[0] == doctest::Approx(2.0));
}

TEST_CASE("ols_restricted: duplicated column raises SingularGram") {
  Rng rng(29);
  Eigen::MatrixXd x(20, 2);
  x.col(0) = rng.normal_vector(20);
  x.col(1) = x.col(0);
  Eigen::VectorXd y = rng.normal_vector(20);
  CHECK_THROWS_AS(ols_restricted(make_problem(x, y), SupportSet{{0, 1}}),
                  SingularGram);
}

TEST_CASE("thresholded_lasso: orthogonal noiseless single coordinate") {
  // orthogonal standardized design: columns of a scaled identity stack
  const int n = 8, p = 4;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
  for (int j = 0; j < p; ++j) {
    x(2 * j, j) = 2.0;  // mean 0 after pairing with -2
    x(2 * j + 1, j) = -2.0;
  }
  // columns have mean 0, sd = sqrt(8/8) = 1 -> standardized
  Eigen::VectorXd y = 1.0 * x.col(3);
  auto problem = make_problem(x, y, true);
  const auto result = thresholded_lasso(problem, 0.3, 0.3);
  CHECK(result.support.indices == std::vector<int>{3});
  CHECK(result.refit.coefficients_on_support[0] == doctest::Approx(1.0));
}

TEST_CASE("thresholded_lasso: everything-zeroing penalty gives empty support") {
  Rng rng(31);
  auto problem = random_problem(rng, 40, 6, 1.0, 2);
  auto [std_problem, stats] = standardize(problem);
  const auto result = thresholded_lasso(std_problem, 1e6, 0.1);
  CHECK(result.support.empty());
  CHECK(result.refit.coefficients_on_support.size() == 0);
}

TEST_CASE("thresholded_lasso: composition is bitwise-identical to the pieces") {
  Rng rng(37);
  auto problem = random_problem(rng, 50, 8, 0.5, 3);
  auto [std_problem, stats] = standardize(problem);
  const auto composed = thresholded_lasso(std_problem, 0.1, 0.05);
  const LassoFit fit = lasso_fit(std_problem, 0.1);
  const SupportSet support = threshold_support(fit, 0.05);
  const OlsFit refit = ols_restricted(std_problem, support);
  CHECK(composed.support.indices == support.indices);
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j)
    CHECK(composed.init.coefficients[j] == fit.coefficients[j]);
  for (Eigen::Index j = 0; j < refit.coefficients_on_support.size(); ++j)
    CHECK(composed.refit.coefficients_on_support[j] ==
          refit.coefficients_on_support[j]);
}

TEST_CASE("select_penalty: pure-noise scale matches the Gaussian rate") {
  // lambda should land within [0.8, 1.3] * sqrt(2 log d / n) for alpha=0.05,
  // c=1.1; checked as the mean over 10 seeded repetitions.
  const int n = 1000, d = 50;
  const double rate = std::sqrt(2.0 * std::log(d) / n);
  double ratio_sum = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    Rng rng(1000 + rep);
    Eigen::MatrixXd x = rng.normal_matrix(n, d);
    Eigen::VectorXd y = rng.normal_vector(n);  // sigma = 1
    auto [std_problem, stats] = standardize(make_problem(x, y));
    const double lambda =
        select_penalty(std_problem, 0.05, 1.1, 500, 555 + rep);
    ratio_sum += lambda / rate;
  }
  const double mean_ratio = ratio_sum / 10.0;
  CHECK(mean_ratio >= 0.8);
  CHECK(mean_ratio <= 1.3);
}

TEST_CASE("select_penalty: homogeneous in the response scale") {
  Rng rng(41);
  Eigen::MatrixXd x = rng.normal_matrix(200, 10);
  Eigen::VectorXd y = rng.normal_vector(200);
  auto [p1, s1] = standardize(make_problem(x, y));
  auto [p2, s2] = standardize(make_problem(x, (2.0 * y).eval()));
  const double l1 = select_penalty(p1, 0.05, 1.1, 300, 99);
  const double l2 = select_penalty(p2, 0.05, 1.1, 300, 99);
  CHECK(l2 / l1 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("select_penalty: num_sim = 1 still defined") {
  Rng rng(43);
  Eigen::MatrixXd x = rng.normal_matrix(50, 5);
  Eigen::VectorXd y = rng.normal_vector(50);
  auto [std_problem, stats] = standardize(make_problem(x, y));
  const double lambda = select_penalty(std_problem, 0.05, 1.1, 1, 7);
  CHECK(lambda > 0.0);
  CHECK(std::isfinite(lambda));
}

TEST_CASE("property: KKT certificate on random problems") {
  Rng rng(101);
  const double tol = 1e-8;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 20 + static_cast<int>(rng.uniform() * 180);
    const int p = 1 + static_cast<int>(rng.uniform() * 29);
    const int sparsity = 1 + static_cast<int>(rng.uniform() * p);
    auto problem = random_problem(rng, n, p, rng.uniform(0.1, 2.0), sparsity);
    auto [std_problem, stats] = standardize(problem);
    const double penalty = rng.uniform(0.0, 0.5);
    const LassoFit fit = lasso_fit(std_problem, penalty, tol);
    CHECK(fit.kkt_violation <= 10 * tol);
  }
}

TEST_CASE("property: l1 norm is monotone non-increasing in the penalty") {
  Rng rng(103);
  for (int trial = 0; trial < 10; ++trial) {
    auto problem = random_problem(rng, 60, 12, 0.5, 4);
    auto [std_problem, stats] = standardize(problem);
    double prev_norm = std::numeric_limits<double>::infinity();
    for (double penalty : {0.0, 0.05, 0.1, 0.2, 0.4, 0.8}) {
      const LassoFit fit = lasso_fit(std_problem, penalty);
      const double norm = fit.coefficients.lpNorm<1>();
      CHECK(norm <= prev_norm + 1e-8);
      prev_norm = norm;
    }
  }
}

TEST_CASE("property: orthogonal design matches the soft-threshold closed form") {
  Rng rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    const int p = 2 + static_cast<int>(rng.uniform() * 6);
    const int n = 4 * p;
    // orthogonalize a random design, then rescale columns to norm sqrt(n)
    Eigen::MatrixXd raw = rng.normal_matrix(n, p);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    Eigen::MatrixXd x = q * std::sqrt(static_cast<double>(n));
    Eigen::VectorXd y = rng.normal_vector(n);
    auto problem = make_problem(x, y, true);  // X^T X / n = I by construction
    const double penalty = rng.uniform(0.01, 0.3);
    const LassoFit fit = lasso_fit(problem, penalty);
    const Eigen::VectorXd corr = x.transpose() * y / n;
    for (int j = 0; j < p; ++j)
      CHECK(fit.coefficients[j] ==
            doctest::Approx(soft_threshold(corr[j], penalty)).epsilon(1e-6));
  }
}

TEST_CASE("property: penalized objective descends across sweeps") {
  // black-box check: the k-sweep iterate (recovered via the sweep budget)
  // never increases the objective
  Rng rng(109);
  auto problem = random_problem(rng, 60, 10, 0.5, 4);
  auto [std_problem, stats] = standardize(problem);
  const double penalty = 0.05;
  double prev = lasso_objective(std_problem, Eigen::VectorXd::Zero(10), penalty);
  for (int sweeps = 1; sweeps <= 8; ++sweeps) {
    Eigen::VectorXd coefs;
    try {
      coefs = lasso_fit(std_problem, penalty, 1e-14, sweeps).coefficients;
    } catch (const DidNotConverge& e) {
      coefs = e.partial.coefficients;
    }
    const double obj = lasso_objective(std_problem, coefs, penalty);
    CHECK(obj <= prev + 1e-12 * (1.0 + std::abs(prev)));
    prev = obj;
  }
}

TEST_CASE("property: zero threshold on an OLS fit keeps all coordinates") {
  Rng rng(113);
  auto problem = random_problem(rng, 80, 7, 1.0, 3);
  auto [std_problem, stats] = standardize(problem);
  const LassoFit fit = lasso_fit(std_problem, 0.0);
  CHECK(threshold_support(fit, 0.0).size() == 7);
}
