#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rfq/regression.hpp"
#include "rfq/rng.hpp"

namespace rfq {

/// Per-timestep, per-action linear Q coefficients plus the state support each
/// stage was fit on. coef[t][a] has length d with zeros off support_state[t].
struct LinearQ {
  int d = 0;
  int num_actions = 0;
  std::vector<std::vector<Eigen::VectorXd>> coef;  // [t][a]
  std::vector<SupportSet> support_state;           // per t

  int horizon() const { return static_cast<int>(coef.size()); }

  double value(int t, const Eigen::VectorXd& state, int action) const {
    return coef[t][action].dot(state);
  }

  Eigen::VectorXd action_values(int t, const Eigen::VectorXd& state) const {
    Eigen::VectorXd q(num_actions);
    for (int a = 0; a < num_actions; ++a) q[a] = coef[t][a].dot(state);
    return q;
  }

  /// argmax_a q(s, a), ties broken toward the lowest action index.
  int greedy_action(int t, const Eigen::VectorXd& state) const {
    int best = 0;
    double best_value = coef[t][0].dot(state);
    for (int a = 1; a < num_actions; ++a) {
      const double v = coef[t][a].dot(state);
      if (v > best_value) {
        best_value = v;
        best = a;
      }
    }
    return best;
  }
};

struct UniformPolicy {};

/// Logistic probability model in the state variable. For two actions
/// P(a=1|s) = 1/(1+exp(-coef.s)); for A > 2 the logits are a * coef.s.
struct LogisticPolicy {
  Eigen::VectorXd coef;
};

/// Point mass on the greedy action of a fitted Q-function.
struct GreedyPolicy {
  std::shared_ptr<const LinearQ> q;
};

using Policy = std::variant<UniformPolicy, LogisticPolicy, GreedyPolicy>;

/// Action distribution of `policy` at `state`; `t` selects the stage for
/// greedy policies (clamped to the Q-function's horizon).
Eigen::VectorXd policy_probs(const Policy& policy, const Eigen::VectorXd& state,
                             int num_actions, int t = 0);

/// Block-structured linear MDP: rewards r(s,a) = reward_coef[a].s + noise are
/// supported on `support` (the reward-relevant coordinates), and every
/// transition matrix has an exactly-zero block from off-support to on-support
/// coordinates, so next-step on-support states never depend on off-support
/// ones.
struct MdpSpec {
  int d = 0;
  SupportSet support;
  int num_actions = 2;
  std::vector<Eigen::MatrixXd> transition;   // per action, d x d
  std::vector<Eigen::VectorXd> reward_coef;  // per action, length d
  double state_noise_sd = 0.4;
  double reward_noise_sd = 0.6;
  int horizon = 5;
  double discount = 0.9;
  double spectral_cap = 0.9;
  double beta_min_floor = 0.5;
};

struct Transition {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
};

/// n offline trajectories in columnar layout: index by timestep, then row =
/// trajectory. states[t+1].row(i) equals next_states[t].row(i) bit-for-bit.
struct TrajectoryBatch {
  std::vector<Eigen::MatrixXd> states;       // T of n x d
  std::vector<Eigen::VectorXi> actions;      // T of n
  std::vector<Eigen::VectorXd> rewards;      // T of n
  std::vector<Eigen::MatrixXd> next_states;  // T of n x d
  int num_actions = 0;
  std::uint64_t seed = 0;
  std::uint64_t spec_fingerprint = 0;

  int horizon() const { return static_cast<int>(states.size()); }
  int num_trajectories() const {
    return states.empty() ? 0 : static_cast<int>(states[0].rows());
  }
  int state_dim() const {
    return states.empty() ? 0 : static_cast<int>(states[0].cols());
  }

  Transition transition(int trajectory, int t) const {
    return {states[t].row(trajectory).transpose(), actions[t][trajectory],
            rewards[t][trajectory],
            next_states[t].row(trajectory).transpose()};
  }
};

struct MdpParams {
  int d = 50;
  int support_size = 10;
  int num_actions = 2;
  int horizon = 5;
  double discount = 0.9;
  double state_noise_sd = 0.4;
  double reward_noise_sd = 0.6;
  double beta_min_floor = 0.5;
  double spectral_cap = 0.9;
};

/// Draws a spec with support {0..support_size-1}: each M_a is filled with
/// independent Normal(0.2, 1) entries, the off-support -> on-support block is
/// forced to zero, and the matrix is rescaled so its spectral norm does not
/// exceed spectral_cap. On-support reward coefficients are uniform on
/// +/-[beta_min_floor, 3*beta_min_floor]; off-support ones are exactly zero.
MdpSpec generate_mdp(const MdpParams& params, std::uint64_t seed);

/// One environment step: reward = reward_coef[a].s + N(0, sigma_r^2),
/// next = M_a s + N(0, sigma_s^2 I). Consumes the reward draw first, then d
/// state-noise draws, regardless of the noise scales.
std::pair<double, Eigen::VectorXd> step(const MdpSpec& spec,
                                        const Eigen::VectorXd& state,
                                        int action, Rng& rng);

/// n independent trajectories, s0 ~ N(0, initial_sd^2 I), actions sampled
/// from `behavior`. Trajectory i uses Rng::substream(seed, i), so output is
/// independent of iteration order.
TrajectoryBatch simulate(const MdpSpec& spec, const Policy& behavior, int n,
                         double initial_sd, std::uint64_t seed);

/// Product-space feature map: block `action` holds the state, other blocks
/// are zero; length d * num_actions.
Eigen::VectorXd features(const Eigen::VectorXd& state, int action,
                         int num_actions);

/// Content hash (FNV-1a 64) of all spec fields; recorded in every batch.
std::uint64_t spec_fingerprint(const MdpSpec& spec);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& m);

}  // namespace rfq
