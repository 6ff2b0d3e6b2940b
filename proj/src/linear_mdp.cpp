#include "rfq/linear_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace rfq {

namespace {

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a_double(std::uint64_t hash, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return fnv1a(hash, &bits, sizeof(bits));
}

std::uint64_t fnv1a_i64(std::uint64_t hash, std::int64_t v) {
  return fnv1a(hash, &v, sizeof(v));
}

}  // namespace

Eigen::VectorXd policy_probs(const Policy& policy, const Eigen::VectorXd& state,
                             int num_actions, int t) {
  if (num_actions < 1) throw InvalidConfig("num_actions must be >= 1");
  Eigen::VectorXd probs(num_actions);
  if (std::holds_alternative<UniformPolicy>(policy)) {
    probs.setConstant(1.0 / num_actions);
    return probs;
  }
  if (const auto* logistic = std::get_if<LogisticPolicy>(&policy)) {
    if (logistic->coef.size() != state.size())
      throw InvalidConfig("logistic policy dimension mismatch");
    const double z = logistic->coef.dot(state);
    // softmax over logits a * z; stabilized by the max logit
    const double zmax = std::max(0.0, (num_actions - 1) * z);
    double total = 0.0;
    for (int a = 0; a < num_actions; ++a) {
      probs[a] = std::exp(a * z - zmax);
      total += probs[a];
    }
    probs /= total;
    return probs;
  }
  const auto& greedy = std::get<GreedyPolicy>(policy);
  if (!greedy.q || greedy.q->horizon() == 0)
    throw InvalidConfig("greedy policy without a Q-function");
  const int tq = std::clamp(t, 0, greedy.q->horizon() - 1);
  probs.setZero();
  probs[greedy.q->greedy_action(tq, state)] = 1.0;
  return probs;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.transpose() * m);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

MdpSpec generate_mdp(const MdpParams& params, std::uint64_t seed) {
  if (params.d < 1 || params.support_size < 1 ||
      params.support_size > params.d)
    throw InvalidConfig("generate_mdp: need 1 <= support_size <= d");
  if (params.num_actions < 2)
    throw InvalidConfig("generate_mdp: num_actions must be >= 2");
  if (params.horizon < 1) throw InvalidConfig("generate_mdp: horizon >= 1");
  if (params.discount <= 0 || params.discount > 1)
    throw InvalidConfig("generate_mdp: discount in (0, 1]");
  if (params.state_noise_sd < 0 || params.reward_noise_sd < 0)
    throw InvalidConfig("generate_mdp: noise sds must be >= 0");
  if (params.beta_min_floor <= 0 || params.spectral_cap <= 0)
    throw InvalidConfig("generate_mdp: beta_min_floor, spectral_cap > 0");

  MdpSpec spec;
  spec.d = params.d;
  spec.num_actions = params.num_actions;
  spec.horizon = params.horizon;
  spec.discount = params.discount;
  spec.state_noise_sd = params.state_noise_sd;
  spec.reward_noise_sd = params.reward_noise_sd;
  spec.spectral_cap = params.spectral_cap;
  spec.beta_min_floor = params.beta_min_floor;
  spec.support.indices.resize(params.support_size);
  for (int j = 0; j < params.support_size; ++j) spec.support.indices[j] = j;

  Rng rng(seed);
  spec.transition.reserve(params.num_actions);
  spec.reward_coef.reserve(params.num_actions);
  for (int a = 0; a < params.num_actions; ++a) {
    Eigen::MatrixXd m =
        rng.normal_matrix(params.d, params.d).array() + 0.2;
    // off-support -> on-support block is exactly zero: on-support rows may
    // not load on off-support columns
    m.block(0, params.support_size, params.support_size,
            params.d - params.support_size)
        .setZero();
    const double norm = spectral_norm(m);
    if (norm > params.spectral_cap) m *= params.spectral_cap / norm;
    spec.transition.push_back(std::move(m));

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(params.d);
    for (int j = 0; j < params.support_size; ++j) {
      const double magnitude =
          params.beta_min_floor * (1.0 + 2.0 * rng.uniform());
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      beta[j] = sign * magnitude;
    }
    spec.reward_coef.push_back(std::move(beta));
  }
  return spec;
}

std::pair<double, Eigen::VectorXd> step(const MdpSpec& spec,
                                        const Eigen::VectorXd& state,
                                        int action, Rng& rng) {
  if (action < 0 || action >= spec.num_actions)
    throw InvalidConfig("step: invalid action");
  if (state.size() != spec.d) throw InvalidConfig("step: state dimension");
  const double reward = spec.reward_coef[action].dot(state) +
                        spec.reward_noise_sd * rng.normal();
  Eigen::VectorXd next = spec.transition[action] * state;
  next.noalias() += spec.state_noise_sd * rng.normal_vector(spec.d);
  return {reward, std::move(next)};
}

TrajectoryBatch simulate(const MdpSpec& spec, const Policy& behavior, int n,
                         double initial_sd, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("simulate: n must be >= 1");
  const int T = spec.horizon;
  const int d = spec.d;

  TrajectoryBatch batch;
  batch.num_actions = spec.num_actions;
  batch.seed = seed;
  batch.spec_fingerprint = spec_fingerprint(spec);
  batch.states.assign(T, Eigen::MatrixXd(n, d));
  batch.actions.assign(T, Eigen::VectorXi(n));
  batch.rewards.assign(T, Eigen::VectorXd(n));
  batch.next_states.assign(T, Eigen::MatrixXd(n, d));

  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(i));
    Eigen::VectorXd state = initial_sd * rng.normal_vector(d);
    for (int t = 0; t < T; ++t) {
      const Eigen::VectorXd probs =
          policy_probs(behavior, state, spec.num_actions, t);
      const int action = rng.categorical(probs);
      auto [reward, next] = step(spec, state, action, rng);
      batch.states[t].row(i) = state.transpose();
      batch.actions[t][i] = action;
      batch.rewards[t][i] = reward;
      batch.next_states[t].row(i) = next.transpose();
      state = std::move(next);
    }
  }
  return batch;
}

Eigen::VectorXd features(const Eigen::VectorXd& state, int action,
                         int num_actions) {
  if (action < 0 || action >= num_actions)
    throw InvalidConfig("features: invalid action");
  Eigen::VectorXd phi =
      Eigen::VectorXd::Zero(state.size() * num_actions);
  phi.segment(action * state.size(), state.size()) = state;
  return phi;
}

std::uint64_t spec_fingerprint(const MdpSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a_i64(h, spec.d);
  h = fnv1a_i64(h, spec.num_actions);
  h = fnv1a_i64(h, spec.horizon);
  for (int j : spec.support.indices) h = fnv1a_i64(h, j);
  h = fnv1a_double(h, spec.state_noise_sd);
  h = fnv1a_double(h, spec.reward_noise_sd);
  h = fnv1a_double(h, spec.discount);
  h = fnv1a_double(h, spec.spectral_cap);
  h = fnv1a_double(h, spec.beta_min_floor);
  for (const auto& m : spec.transition)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        h = fnv1a_double(h, m(i, j));
  for (const auto& beta : spec.reward_coef)
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      h = fnv1a_double(h, beta[j]);
  return h;
}

}  // namespace rfq
