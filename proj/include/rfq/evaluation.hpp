#pragma once

#include <cstdint>
#include <string>

#include "rfq/fqi.hpp"

namespace rfq {

/// One (method, sample size, replication) result row.
struct MetricsRecord {
  enum class Method { RewardFiltered, NaiveThresholded };

  Method method = Method::RewardFiltered;
  int n = 0;
  int replication = 0;
  double q_mse = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  int fp_count = 0;
  double wall_time_ms = 0.0;
};

std::string method_name(MetricsRecord::Method method);
MetricsRecord::Method method_from_name(const std::string& name);

/// Sampled extremes of restricted Gram eigenvalues, a randomized proxy for
/// the restricted-eigenvalue condition (the exact combinatorial minimum over
/// all subsets is intractable at d = 50).
struct ReDiagnostic {
  int subset_size = 0;
  int num_sampled = 0;
  double min_restricted_eig = 0.0;
  double max_restricted_eig = 0.0;
};

/// Mean over eval_states rows and over actions of
/// (q_est(s,a) - q_oracle(s,a))^2 at timestep t.
double q_mse(const LinearQ& estimate, const LinearQ& oracle,
             const Eigen::MatrixXd& eval_states, int t);

struct SupportMetrics {
  double tpr = 0.0;  // |est & truth| / |truth|
  double fpr = 0.0;  // |est & truth^c| / |truth^c|  (0 when truth^c is empty)
  int fp_count = 0;  // |est & truth^c|
};

/// Throws EmptyTruth when |truth| = 0.
SupportMetrics support_metrics(const SupportSet& estimated,
                               const SupportSet& truth, int d);

/// Samples num_sampled uniformly random coordinate subsets of the given size
/// (sequentially from `seed`, so nested sample counts share a prefix),
/// computes extreme eigenvalues of each restricted Gram matrix X_S^T X_S / n,
/// and reports the min of minima and max of maxima. When `force_include` is
/// given, that subset is always evaluated as well.
ReDiagnostic re_diagnostic(const Eigen::MatrixXd& design, int subset_size,
                           int num_sampled, std::uint64_t seed,
                           const SupportSet* force_include = nullptr);

/// min over actions and on-support coordinates of |reward_coef| minus
/// penalty * sigma; positive means the beta-min condition holds at this
/// (penalty, sigma).
double beta_min_margin(const MdpSpec& spec, double penalty, double sigma);

}  // namespace rfq
