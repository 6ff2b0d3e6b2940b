#include "rfq/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rfq/rng.hpp"

namespace rfq {

std::string method_name(MetricsRecord::Method method) {
  return method == MetricsRecord::Method::RewardFiltered ? "RewardFiltered"
                                                         : "NaiveThresholded";
}

MetricsRecord::Method method_from_name(const std::string& name) {
  if (name == "RewardFiltered") return MetricsRecord::Method::RewardFiltered;
  if (name == "NaiveThresholded")
    return MetricsRecord::Method::NaiveThresholded;
  throw InvalidConfig("unknown method '" + name + "'");
}

double q_mse(const LinearQ& estimate, const LinearQ& oracle,
             const Eigen::MatrixXd& eval_states, int t) {
  if (eval_states.rows() < 1)
    throw InvalidConfig("q_mse: eval_states must be nonempty");
  if (estimate.d != oracle.d || estimate.num_actions != oracle.num_actions ||
      eval_states.cols() != estimate.d)
    throw InvalidConfig("q_mse: dimension mismatch");
  if (t < 0 || t >= estimate.horizon() || t >= oracle.horizon())
    throw InvalidConfig("q_mse: timestep out of range");

  double acc = 0.0;
  for (int a = 0; a < estimate.num_actions; ++a) {
    const Eigen::VectorXd diff =
        eval_states * (estimate.coef[t][a] - oracle.coef[t][a]);
    acc += diff.squaredNorm();
  }
  return acc / (static_cast<double>(eval_states.rows()) *
                estimate.num_actions);
}

SupportMetrics support_metrics(const SupportSet& estimated,
                               const SupportSet& truth, int d) {
  if (truth.empty()) throw EmptyTruth();
  for (int j : estimated.indices)
    if (j < 0 || j >= d) throw InvalidConfig("support index out of range");
  for (int j : truth.indices)
    if (j < 0 || j >= d) throw InvalidConfig("support index out of range");

  int true_pos = 0;
  for (int j : estimated.indices)
    if (truth.contains(j)) ++true_pos;

  SupportMetrics metrics;
  metrics.fp_count = estimated.size() - true_pos;
  metrics.tpr = static_cast<double>(true_pos) / truth.size();
  const int complement = d - truth.size();
  metrics.fpr = complement > 0
                    ? static_cast<double>(metrics.fp_count) / complement
                    : 0.0;
  return metrics;
}

ReDiagnostic re_diagnostic(const Eigen::MatrixXd& design, int subset_size,
                           int num_sampled, std::uint64_t seed,
                           const SupportSet* force_include) {
  const int n = static_cast<int>(design.rows());
  const int d = static_cast<int>(design.cols());
  if (subset_size < 1 || subset_size > std::min(n, d))
    throw InvalidConfig("re_diagnostic: subset_size must be in [1, min(n, d)]");
  if (num_sampled < 0) throw InvalidConfig("re_diagnostic: num_sampled >= 0");

  ReDiagnostic diag;
  diag.subset_size = subset_size;
  diag.num_sampled = num_sampled;
  diag.min_restricted_eig = std::numeric_limits<double>::infinity();
  diag.max_restricted_eig = -std::numeric_limits<double>::infinity();

  const auto evaluate = [&](const std::vector<int>& idx) {
    Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c)
      sub.col(static_cast<Eigen::Index>(c)) = design.col(idx[c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        sub.transpose() * sub / static_cast<double>(n));
    diag.min_restricted_eig =
        std::min(diag.min_restricted_eig, eig.eigenvalues().minCoeff());
    diag.max_restricted_eig =
        std::max(diag.max_restricted_eig, eig.eigenvalues().maxCoeff());
  };

  if (force_include != nullptr && !force_include->empty())
    evaluate(force_include->indices);

  Rng rng(seed);
  std::vector<int> perm(d);
  for (int k = 0; k < num_sampled; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 0; i < subset_size; ++i) {
      const int j =
          i + static_cast<int>(rng.uniform() * static_cast<double>(d - i));
      std::swap(perm[i], perm[std::min(j, d - 1)]);
    }
    std::vector<int> idx(perm.begin(), perm.begin() + subset_size);
    std::sort(idx.begin(), idx.end());
    evaluate(idx);
  }

  if (!std::isfinite(diag.min_restricted_eig)) {
    diag.min_restricted_eig = 0.0;
    diag.max_restricted_eig = 0.0;
  }
  return diag;
}

double beta_min_margin(const MdpSpec& spec, double penalty, double sigma) {
  if (spec.support.empty()) throw EmptyTruth();
  double beta_min = std::numeric_limits<double>::infinity();
  for (const auto& beta : spec.reward_coef)
    for (int j : spec.support.indices)
      beta_min = std::min(beta_min, std::abs(beta[j]));
  return beta_min - penalty * sigma;
}

}  // namespace rfq
