#include "rfq/regression.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "rfq/rng.hpp"

namespace rfq {

bool SupportSet::contains(int j) const {
  return std::binary_search(indices.begin(), indices.end(), j);
}

SupportSet SupportSet::full(int d) {
  SupportSet s;
  s.indices.resize(d);
  for (int j = 0; j < d; ++j) s.indices[j] = j;
  return s;
}

SupportSet SupportSet::union_of(const SupportSet& a, const SupportSet& b) {
  SupportSet out;
  std::set_union(a.indices.begin(), a.indices.end(), b.indices.begin(),
                 b.indices.end(), std::back_inserter(out.indices));
  return out;
}

Eigen::VectorXd OlsFit::embedded(int d) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(d);
  for (int k = 0; k < support.size(); ++k)
    full[support.indices[k]] = coefficients_on_support[k];
  return full;
}

std::pair<RegressionProblem, StandardizationStats> standardize(
    const RegressionProblem& problem) {
  const Eigen::Index n = problem.n();
  const Eigen::Index p = problem.p();
  if (n < 2 || p < 1)
    throw InvalidConfig("standardize requires n >= 2 and p >= 1");
  if (problem.response.size() != n)
    throw InvalidConfig("design/response row mismatch");
  if (!problem.design.allFinite() || !problem.response.allFinite())
    throw NonFiniteInput();

  StandardizationStats stats;
  stats.column_means = problem.design.colwise().mean();
  Eigen::MatrixXd centered =
      problem.design.rowwise() - stats.column_means.transpose();
  stats.column_sds =
      (centered.array().square().colwise().sum() / static_cast<double>(n))
          .sqrt()
          .matrix()
          .transpose();
  for (Eigen::Index j = 0; j < p; ++j)
    if (stats.column_sds[j] <= 1e-12) throw ConstantColumn(static_cast<int>(j));

  RegressionProblem out;
  out.design = centered.array().rowwise() /
               stats.column_sds.transpose().array();
  stats.response_mean = problem.response.mean();
  out.response = problem.response.array() - stats.response_mean;
  out.standardized = true;
  return {std::move(out), std::move(stats)};
}

double lasso_objective(const RegressionProblem& problem,
                       const Eigen::VectorXd& coefficients, double penalty) {
  const double n = static_cast<double>(problem.n());
  const double rss =
      (problem.response - problem.design * coefficients).squaredNorm();
  return 0.5 * rss / n + penalty * coefficients.lpNorm<1>();
}

LassoFit lasso_fit(const RegressionProblem& problem, double penalty,
                   double tol, int max_iters) {
  if (!problem.standardized)
    throw InvalidConfig("lasso_fit requires a standardized problem");
  if (penalty < 0 || tol <= 0 || max_iters < 1)
    throw InvalidConfig("lasso_fit: penalty >= 0, tol > 0, max_iters >= 1");

  const Eigen::Index n = problem.n();
  const Eigen::Index p = problem.p();
  const double dn = static_cast<double>(n);
  // x_j^T x_j / n; exactly 1 for divisor-n standardized columns, but computed
  // so externally standardized inputs stay correct.
  const Eigen::VectorXd col_ms =
      problem.design.colwise().squaredNorm() / dn;

  LassoFit fit;
  fit.penalty = penalty;
  fit.coefficients = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd residual = problem.response;

#ifndef NDEBUG
  double prev_obj = lasso_objective(problem, fit.coefficients, penalty);
#endif

  bool converged = false;
  double max_delta = 0.0;
  for (int sweep = 1; sweep <= max_iters; ++sweep) {
    max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double wj = fit.coefficients[j];
      const double gj =
          problem.design.col(j).dot(residual) / dn + col_ms[j] * wj;
      const double wj_new = soft_threshold(gj, penalty) / col_ms[j];
      const double delta = wj_new - wj;
      if (delta != 0.0) {
        residual.noalias() -= delta * problem.design.col(j);
        fit.coefficients[j] = wj_new;
      }
      max_delta = std::max(max_delta, std::abs(delta));
    }
    fit.iterations = sweep;
#ifndef NDEBUG
    const double obj = lasso_objective(problem, fit.coefficients, penalty);
    assert(obj <= prev_obj + 1e-12 * (1.0 + std::abs(prev_obj)));
    prev_obj = obj;
#endif
    if (max_delta <= tol) {
      converged = true;
      break;
    }
  }

  fit.max_coef_delta_at_exit = max_delta;
  fit.kkt_violation = verify_kkt(problem, fit);
  if (!converged) throw DidNotConverge(std::move(fit));
  return fit;
}

double verify_kkt(const RegressionProblem& problem, const LassoFit& fit) {
  if (problem.p() != fit.coefficients.size())
    throw InvalidConfig("verify_kkt: dimension mismatch");
  const double dn = static_cast<double>(problem.n());
  const Eigen::VectorXd g =
      problem.design.transpose() *
      (problem.response - problem.design * fit.coefficients) / dn;
  double viol = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (fit.coefficients[j] != 0.0)
      viol = std::max(viol, std::abs(std::abs(g[j]) - fit.penalty));
    else
      viol = std::max(viol, std::max(std::abs(g[j]) - fit.penalty, 0.0));
  }
  return viol;
}

SupportSet threshold_support(const LassoFit& fit, double threshold) {
  if (threshold < 0) throw InvalidConfig("threshold must be >= 0");
  SupportSet support;
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j)
    if (std::abs(fit.coefficients[j]) > threshold)
      support.indices.push_back(static_cast<int>(j));
  return support;
}

OlsFit ols_restricted(const RegressionProblem& problem,
                      const SupportSet& support) {
  const Eigen::Index n = problem.n();
  const double dn = static_cast<double>(n);
  OlsFit fit;
  fit.support = support;
  const int k = support.size();
  if (k == 0) {
    fit.coefficients_on_support = Eigen::VectorXd();
    fit.residual_variance = problem.response.squaredNorm() / dn;
    return fit;
  }
  if (k > n)
    throw InvalidConfig("ols_restricted: |support| exceeds sample size");

  Eigen::MatrixXd sub(n, k);
  for (int c = 0; c < k; ++c) sub.col(c) = problem.design.col(support.indices[c]);

  const Eigen::MatrixXd gram = sub.transpose() * sub / dn;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.eigenvalues().minCoeff() <= 1e-10) throw SingularGram();

  fit.coefficients_on_support =
      gram.llt().solve(sub.transpose() * problem.response / dn);
  const double rss =
      (problem.response - sub * fit.coefficients_on_support).squaredNorm();
  const Eigen::Index dof = n - k;
  fit.residual_variance = dof > 0 ? rss / static_cast<double>(dof) : 0.0;
  return fit;
}

ThresholdedLasso thresholded_lasso(const RegressionProblem& problem,
                                   double penalty, double threshold,
                                   double tol, int max_iters) {
  ThresholdedLasso result;
  result.init = lasso_fit(problem, penalty, tol, max_iters);
  result.support = threshold_support(result.init, threshold);
  result.refit = ols_restricted(problem, result.support);
  return result;
}

PenaltySelection select_penalty_detail(const RegressionProblem& problem,
                                       double alpha, double c, int num_sim,
                                       std::uint64_t seed, double tol,
                                       int max_iters, int refine_passes) {
  if (!problem.standardized)
    throw InvalidConfig("select_penalty requires a standardized problem");
  if (alpha <= 0 || alpha >= 1 || c <= 1 || num_sim < 1 || refine_passes < 1)
    throw InvalidConfig(
        "select_penalty: alpha in (0,1), c > 1, num_sim >= 1, passes >= 1");

  const Eigen::Index n = problem.n();
  const double dn = static_cast<double>(n);

  PenaltySelection sel;
  {
    const double mu = problem.response.mean();
    sel.sd_initial = std::sqrt(
        (problem.response.array() - mu).matrix().squaredNorm() / dn);
  }

  // Empirical (1-alpha) quantile of ||X^T e / n||_inf over standard-normal
  // noise vectors e; simulated in column chunks so one GEMM serves many
  // draws. Fill order is (sim, row), fixed by the seed.
  std::vector<double> norms(static_cast<std::size_t>(num_sim));
  Rng rng(seed);
  constexpr int kChunk = 64;
  Eigen::MatrixXd noise(n, kChunk);
  for (int s0 = 0; s0 < num_sim; s0 += kChunk) {
    const int m = std::min(kChunk, num_sim - s0);
    for (int sim = 0; sim < m; ++sim)
      for (Eigen::Index i = 0; i < n; ++i) noise(i, sim) = rng.normal();
    const Eigen::MatrixXd corr =
        problem.design.transpose() * noise.leftCols(m) / dn;
    for (int sim = 0; sim < m; ++sim)
      norms[static_cast<std::size_t>(s0 + sim)] =
          corr.col(sim).cwiseAbs().maxCoeff();
  }
  std::sort(norms.begin(), norms.end());
  const long idx = std::clamp<long>(
      static_cast<long>(std::ceil((1.0 - alpha) * num_sim)) - 1, 0,
      num_sim - 1);
  sel.quantile = norms[static_cast<std::size_t>(idx)];

  double sd = sel.sd_initial;
  for (int pass = 0; pass < refine_passes; ++pass) {
    const LassoFit pilot = lasso_fit(problem, c * sd * sel.quantile, tol,
                                     max_iters);
    const double sd_next = std::sqrt(
        (problem.response - problem.design * pilot.coefficients).squaredNorm() /
        dn);
    const bool stable = std::abs(sd_next - sd) <= 1e-3 * std::max(sd, 1e-12);
    sd = sd_next;
    if (stable) break;
  }
  sel.sd_refined = sd;
  sel.penalty = c * sel.sd_refined * sel.quantile;
  return sel;
}

double select_penalty(const RegressionProblem& problem, double alpha, double c,
                      int num_sim, std::uint64_t seed) {
  return select_penalty_detail(problem, alpha, c, num_sim, seed).penalty;
}

}  // namespace rfq
