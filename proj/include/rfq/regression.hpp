#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rfq/errors.hpp"

namespace rfq {

/// Dense regression data. `standardized = true` marks a design whose columns
/// have sample mean 0 and sample standard deviation 1 (divisor-n variance)
/// and whose response has been mean-centered but not rescaled, so penalties
/// live on the response's natural scale.
struct RegressionProblem {
  Eigen::MatrixXd design;    // n x p
  Eigen::VectorXd response;  // length n
  bool standardized = false;

  Eigen::Index n() const { return design.rows(); }
  Eigen::Index p() const { return design.cols(); }
};

/// Column statistics of the original design; applying (x - mean)/sd
/// column-wise reproduces the standardized design bit-for-bit.
struct StandardizationStats {
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_sds;  // strictly positive
  double response_mean = 0.0;
};

/// L1-penalized least-squares solution on the standardized scale.
/// Objective: (1/2n) ||y - X w||^2 + penalty * ||w||_1.
struct LassoFit {
  Eigen::VectorXd coefficients;
  double penalty = 0.0;
  int iterations = 0;                  // full coordinate sweeps executed
  double max_coef_delta_at_exit = 0.0;
  double kkt_violation = 0.0;          // see verify_kkt
};

/// Strictly increasing coordinate indices into [0, p).
struct SupportSet {
  std::vector<int> indices;

  int size() const { return static_cast<int>(indices.size()); }
  bool empty() const { return indices.empty(); }
  bool contains(int j) const;

  static SupportSet full(int d);
  static SupportSet union_of(const SupportSet& a, const SupportSet& b);

  bool operator==(const SupportSet&) const = default;
};

struct OlsFit {
  Eigen::VectorXd coefficients_on_support;  // length |support|
  SupportSet support;
  double residual_variance = 0.0;

  /// Coefficients written back into an ambient length-d vector, zeros
  /// off-support.
  Eigen::VectorXd embedded(int d) const;
};

/// Thrown by lasso_fit when max_iters sweeps did not reach tol. `partial`
/// carries the last iterate (with its KKT residual filled in) so callers may
/// accept it or retry with a larger budget.
class DidNotConverge : public Error {
 public:
  explicit DidNotConverge(LassoFit partial_fit)
      : Error("did_not_converge",
              "coordinate descent did not converge within the sweep budget"),
        partial(std::move(partial_fit)) {}

  LassoFit partial;
};

/// Centers and scales every design column (divisor-n sd) and centers the
/// response. Requires n >= 2 and all-finite input.
/// Throws ConstantColumn(j) when column j has sd <= 1e-12, NonFiniteInput on
/// NaN/Inf entries.
std::pair<RegressionProblem, StandardizationStats> standardize(
    const RegressionProblem& problem);

/// sign(z) * max(|z| - t, 0), t >= 0.
inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return -(-z - t);
  return 0.0;
}

/// Cyclic coordinate descent (fixed index order 0..p-1, cached residual
/// updates) on a standardized problem, starting from the zero vector.
/// Stops when the largest absolute coefficient change in one full sweep is
/// <= tol; otherwise throws DidNotConverge after max_iters sweeps.
LassoFit lasso_fit(const RegressionProblem& problem, double penalty,
                   double tol = 1e-8, int max_iters = 10000);

/// KKT residual of a fit: with g_j = x_j^T (y - X w) / n, returns
///   max_j  | |g_j| - penalty |            for w_j != 0,
///          max(|g_j| - penalty, 0)        for w_j == 0.
/// Zero (up to round-off) certifies optimality.
double verify_kkt(const RegressionProblem& problem, const LassoFit& fit);

/// { j : |coefficients_j| > threshold }, strict inequality.
SupportSet threshold_support(const LassoFit& fit, double threshold);

/// Exact least squares restricted to the support columns, solved through a
/// Cholesky factorization of the Gram matrix X_S^T X_S / n after checking
/// its smallest eigenvalue exceeds 1e-10 (throws SingularGram otherwise --
/// no silent ridge fallback). Empty support returns the zero fit with
/// residual_variance = ||y||^2 / n.
OlsFit ols_restricted(const RegressionProblem& problem,
                      const SupportSet& support);

struct ThresholdedLasso {
  SupportSet support;
  OlsFit refit;
  LassoFit init;
};

/// lasso_fit -> threshold_support -> ols_restricted, returning all three
/// artifacts. Component errors propagate unchanged.
ThresholdedLasso thresholded_lasso(const RegressionProblem& problem,
                                   double penalty, double threshold,
                                   double tol = 1e-8, int max_iters = 10000);

struct PenaltySelection {
  double penalty = 0.0;   // c * sd_refined * quantile
  double quantile = 0.0;  // empirical (1-alpha) quantile of ||X^T e / n||_inf
  double sd_initial = 0.0;
  double sd_refined = 0.0;
};

/// Two-stage data-driven penalty rule: (i) sd_initial = sample sd of the
/// response; (ii) simulate num_sim standard-normal noise vectors e and take
/// the empirical (1-alpha) quantile q of ||X^T e / n||_inf; (iii) fit the
/// LASSO at c * sd_initial * q; (iv) return c * sd_refined * q where
/// sd_refined is the residual sd of that fit. refine_passes > 1 repeats step
/// (iii)-(iv) with the updated sd (stopping early once sd stabilizes to 0.1%),
/// which de-biases sd_refined when the response carries strong signal. The
/// simulation stream is fully determined by `seed`.
PenaltySelection select_penalty_detail(const RegressionProblem& problem,
                                       double alpha, double c, int num_sim,
                                       std::uint64_t seed, double tol = 1e-8,
                                       int max_iters = 10000,
                                       int refine_passes = 1);

double select_penalty(const RegressionProblem& problem, double alpha, double c,
                      int num_sim, std::uint64_t seed);

/// (1/2n) ||y - X w||^2 + penalty * ||w||_1.
double lasso_objective(const RegressionProblem& problem,
                       const Eigen::VectorXd& coefficients, double penalty);

}  // namespace rfq
