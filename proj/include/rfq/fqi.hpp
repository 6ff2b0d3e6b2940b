#pragma once

#include <cstdint>
#include <vector>

#include "rfq/linear_mdp.hpp"

namespace rfq {

struct FqiConfig {
  enum class Mode { Iteration, Evaluation };
  enum class PenaltyRule { Fixed, DataDriven };
  enum class ThresholdRule { Fixed, ScaledToPenalty };
  enum class SupportPooling { UnionOverActions, PerAction };

  Mode mode = Mode::Evaluation;
  Policy target_policy = UniformPolicy{};  // Evaluation mode only

  PenaltyRule penalty_rule = PenaltyRule::DataDriven;
  double fixed_penalty = 0.0;  // PenaltyRule::Fixed
  double alpha = 0.05;         // DataDriven quantile level
  double penalty_c = 1.1;      // DataDriven multiplier c
  int num_sim = 500;           // DataDriven simulation draws
  // Stage regressions carry strong signal, so the noise-sd refinement is
  // iterated until it stabilizes (bounded by this pass count); a single pass
  // leaves enough shrinkage bias in sigma-hat to push the threshold past
  // floor-level coefficients.
  int penalty_refine_passes = 12;

  // ScaledToPenalty instantiates tau0 = C * lambda * sigma: with a
  // data-driven penalty, tau0 = threshold_scale * sd_refined * quantile
  // (sigma-hat from the refinement pass times the dimensionless rate); with
  // a fixed penalty, tau0 = threshold_scale * fixed_penalty (the fixed
  // penalty already carries the response scale).
  ThresholdRule threshold_rule = ThresholdRule::ScaledToPenalty;
  double fixed_threshold = 0.0;
  double threshold_scale = 2.0;

  double discount = 0.9;
  double lasso_tol = 1e-8;
  int lasso_max_iters = 10000;
  SupportPooling support_pooling = SupportPooling::UnionOverActions;

  // Minimum per-(timestep, action) cell size is max(10, 2 * this); cells
  // below it raise EmptyActionCell.
  int expected_support_size = 0;

  // Penalty-selection simulation streams derive from this; both methods run
  // with the same seed so stage-T fits coincide bitwise.
  std::uint64_t seed = 0;
};

/// Worst case across the per-action regressions of one timestep;
/// support_size counts the pooled (union) support.
struct StageDiagnostics {
  double penalty = 0.0;
  double threshold = 0.0;
  int support_size = 0;
  int lasso_iterations = 0;
  double kkt_violation = 0.0;
};

struct FqiResult {
  LinearQ qfun;
  Policy greedy_policy;  // greedy over qfun
  std::vector<StageDiagnostics> per_timestep;
};

/// Support recovered from the timestep-t rewards: per action, standardize the
/// states and run thresholded LASSO of rewards on the d state covariates,
/// then pool per config.support_pooling (the union either way; per-action
/// sets only change which support downstream fits use).
SupportSet reward_support(const TrajectoryBatch& batch, int t,
                          const FqiConfig& config);

/// Regression targets at timestep t (0-based): the observed rewards at the
/// terminal stage, otherwise r + discount * aggregate of q_next at the next
/// state -- max over actions in Iteration mode, expectation under the target
/// policy in Evaluation mode. q_next must be non-null iff t < T-1.
Eigen::VectorXd bellman_targets(const TrajectoryBatch& batch, int t,
                                const LinearQ* q_next, const FqiConfig& config);

/// Backward fitted-Q pass where each stage's regression support comes from a
/// thresholded LASSO on the *rewards* alone; Q coefficients are per-action
/// least squares of the Bellman targets restricted to that support.
FqiResult run_reward_filtered(const TrajectoryBatch& batch,
                              const FqiConfig& config);

/// Baseline: identical backward pass, except each stage's support comes from
/// thresholded LASSO applied directly to the Bellman targets.
FqiResult run_naive_thresholded(const TrajectoryBatch& batch,
                                const FqiConfig& config);

/// High-sample reference Q-function: simulates n_oracle fresh trajectories
/// under a uniform behavior policy and runs the backward pass with
/// unrestricted per-action OLS on all d state coordinates (no thresholding).
/// Requires n_oracle >= 20 * d.
LinearQ run_oracle_q(const MdpSpec& spec, const Policy& target_policy,
                     int n_oracle, std::uint64_t seed, const FqiConfig& config,
                     double initial_sd = 1.0);

}  // namespace rfq
