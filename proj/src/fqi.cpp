#include "rfq/fqi.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

namespace rfq {

namespace {

enum class SupportSource { Rewards, Targets, Full };

std::vector<std::vector<int>> rows_by_action(const TrajectoryBatch& batch,
                                             int t) {
  std::vector<std::vector<int>> rows(batch.num_actions);
  const auto& actions = batch.actions[t];
  for (Eigen::Index i = 0; i < actions.size(); ++i)
    rows[actions[i]].push_back(static_cast<int>(i));
  return rows;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m,
                            const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(k) = m.row(rows[k]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = v[rows[k]];
  return out;
}

struct StageSelection {
  std::vector<SupportSet> per_action;
  SupportSet pooled;
  StageDiagnostics diag;
};

// Per-action thresholded LASSO of `selection_response` on the timestep-t
// states, with the penalty/threshold rules applied to that same regression.
// Both methods share the simulation stream (seeded by config.seed, t,
// action), so their stage-T fits coincide bitwise.
StageSelection select_stage_support(
    const TrajectoryBatch& batch, int t,
    const std::vector<std::vector<int>>& rows,
    const Eigen::VectorXd& selection_response, const FqiConfig& config) {
  StageSelection sel;
  sel.per_action.resize(batch.num_actions);
  const int min_rows = std::max(10, 2 * config.expected_support_size);

  for (int a = 0; a < batch.num_actions; ++a) {
    if (static_cast<int>(rows[a].size()) < min_rows)
      throw EmptyActionCell(a, t);

    RegressionProblem raw;
    raw.design = gather_rows(batch.states[t], rows[a]);
    raw.response = gather(selection_response, rows[a]);
    auto [problem, stats] = standardize(raw);

    const std::uint64_t stage_seed = seed_chain(
        seed_chain(seed_chain(config.seed, 0x5747ULL), t), a);

    double penalty = 0.0;
    double threshold = 0.0;
    if (config.penalty_rule == FqiConfig::PenaltyRule::DataDriven) {
      const PenaltySelection ps = select_penalty_detail(
          problem, config.alpha, config.penalty_c, config.num_sim, stage_seed,
          config.lasso_tol, config.lasso_max_iters,
          config.penalty_refine_passes);
      penalty = ps.penalty;
      threshold = config.threshold_rule == FqiConfig::ThresholdRule::Fixed
                      ? config.fixed_threshold
                      : config.threshold_scale * ps.sd_refined * ps.quantile;
    } else {
      penalty = config.fixed_penalty;
      threshold = config.threshold_rule == FqiConfig::ThresholdRule::Fixed
                      ? config.fixed_threshold
                      : config.threshold_scale * config.fixed_penalty;
    }

    const LassoFit fit = lasso_fit(problem, penalty, config.lasso_tol,
                                   config.lasso_max_iters);
    sel.per_action[a] = threshold_support(fit, threshold);
    sel.pooled = SupportSet::union_of(sel.pooled, sel.per_action[a]);

    sel.diag.penalty = std::max(sel.diag.penalty, penalty);
    sel.diag.threshold = std::max(sel.diag.threshold, threshold);
    sel.diag.lasso_iterations =
        std::max(sel.diag.lasso_iterations, fit.iterations);
    sel.diag.kkt_violation =
        std::max(sel.diag.kkt_violation, fit.kkt_violation);
  }
  sel.diag.support_size = sel.pooled.size();
  return sel;
}

FqiResult run_backward(const TrajectoryBatch& batch, const FqiConfig& config,
                       SupportSource source) {
  const int T = batch.horizon();
  const int d = batch.state_dim();
  const int A = batch.num_actions;
  if (T < 1 || d < 1 || A < 1)
    throw InvalidConfig("empty trajectory batch");

  FqiResult result;
  result.qfun.d = d;
  result.qfun.num_actions = A;
  result.qfun.coef.assign(T, std::vector<Eigen::VectorXd>(A));
  result.qfun.support_state.assign(T, SupportSet{});
  result.per_timestep.assign(T, StageDiagnostics{});

  for (int t = T - 1; t >= 0; --t) {
    const Eigen::VectorXd targets =
        bellman_targets(batch, t, t + 1 < T ? &result.qfun : nullptr, config);
    const auto rows = rows_by_action(batch, t);

    StageSelection sel;
    if (source == SupportSource::Full) {
      sel.per_action.assign(A, SupportSet::full(d));
      sel.pooled = SupportSet::full(d);
      sel.diag.support_size = d;
    } else {
      const Eigen::VectorXd& selection_response =
          source == SupportSource::Rewards ? batch.rewards[t] : targets;
      sel = select_stage_support(batch, t, rows, selection_response, config);
    }

    // Q fit: raw (unstandardized, no intercept) least squares of the targets
    // on the support columns, per action, embedded back to length d.
    for (int a = 0; a < A; ++a) {
      const SupportSet& fit_support =
          config.support_pooling == FqiConfig::SupportPooling::UnionOverActions
              ? sel.pooled
              : sel.per_action[a];
      RegressionProblem raw;
      raw.design = gather_rows(batch.states[t], rows[a]);
      raw.response = gather(targets, rows[a]);
      const OlsFit ols = ols_restricted(raw, fit_support);
      result.qfun.coef[t][a] = ols.embedded(d);
    }
    result.qfun.support_state[t] = sel.pooled;
    result.per_timestep[t] = sel.diag;
  }

  result.greedy_policy =
      GreedyPolicy{std::make_shared<LinearQ>(result.qfun)};
  return result;
}

}  // namespace

SupportSet reward_support(const TrajectoryBatch& batch, int t,
                          const FqiConfig& config) {
  if (t < 0 || t >= batch.horizon() || batch.num_trajectories() == 0)
    throw InvalidConfig("reward_support: empty batch or timestep out of range");
  const auto rows = rows_by_action(batch, t);
  return select_stage_support(batch, t, rows, batch.rewards[t], config).pooled;
}

Eigen::VectorXd bellman_targets(const TrajectoryBatch& batch, int t,
                                const LinearQ* q_next,
                                const FqiConfig& config) {
  const int T = batch.horizon();
  if (t < 0 || t >= T) throw InvalidConfig("bellman_targets: bad timestep");
  if ((q_next != nullptr) != (t < T - 1))
    throw InvalidConfig("bellman_targets: q_next required iff t < T-1");
  if (t == T - 1) return batch.rewards[t];

  const Eigen::MatrixXd& next = batch.next_states[t];
  const Eigen::Index n = next.rows();
  const int A = batch.num_actions;

  Eigen::MatrixXd qvals(n, A);
  for (int a = 0; a < A; ++a)
    qvals.col(a) = next * q_next->coef[t + 1][a];

  Eigen::VectorXd aggregate(n);
  if (config.mode == FqiConfig::Mode::Iteration) {
    aggregate = qvals.rowwise().maxCoeff();
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd probs = policy_probs(
          config.target_policy, next.row(i).transpose(), A, t + 1);
      aggregate[i] = probs.dot(qvals.row(i).transpose());
    }
  }
  return batch.rewards[t] + config.discount * aggregate;
}

FqiResult run_reward_filtered(const TrajectoryBatch& batch,
                              const FqiConfig& config) {
  return run_backward(batch, config, SupportSource::Rewards);
}

FqiResult run_naive_thresholded(const TrajectoryBatch& batch,
                                const FqiConfig& config) {
  return run_backward(batch, config, SupportSource::Targets);
}

LinearQ run_oracle_q(const MdpSpec& spec, const Policy& target_policy,
                     int n_oracle, std::uint64_t seed, const FqiConfig& config,
                     double initial_sd) {
  if (n_oracle < 20 * spec.d)
    throw InvalidConfig("run_oracle_q: n_oracle must be >= 20 * d");
  const TrajectoryBatch batch =
      simulate(spec, UniformPolicy{}, n_oracle, initial_sd, seed);
  FqiConfig oracle_config = config;
  oracle_config.target_policy = target_policy;
  return run_backward(batch, oracle_config, SupportSource::Full).qfun;
}

}  // namespace rfq
