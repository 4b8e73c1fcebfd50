#include "agent_util.hpp"
#include "msched/algos.hpp"

namespace msched {

using detail::layer_sizes;
using detail::stack;

Td3Agent::Td3Agent(int obs_dim, int action_dim, const AlgoConfig& cfg, std::mt19937_64& rng)
    : actor(layer_sizes(obs_dim, cfg.hidden, action_dim), nn::Activation::kReLU,
            nn::Activation::kTanh, rng, 0.01),
      critic1(detail::make_critic(obs_dim, action_dim, cfg, rng)),
      critic2(detail::make_critic(obs_dim, action_dim, cfg, rng)),
      actor_target(actor),
      critic1_target(critic1),
      critic2_target(critic2),
      cfg_(cfg),
      actor_opt_(detail::make_adam(actor, cfg.actor_lr)),
      critic1_opt_(detail::make_adam(critic1, cfg.critic_lr)),
      critic2_opt_(detail::make_adam(critic2, cfg.critic_lr)) {}

Eigen::VectorXd Td3Agent::explore(const Eigen::VectorXd& obs, double, std::mt19937_64& rng) {
  const Eigen::VectorXd a = actor.predict(obs);
  return (a + detail::gaussian_noise(a.size(), cfg_.td3_explore_noise, rng))
      .cwiseMax(-1.0)
      .cwiseMin(1.0);
}

Eigen::VectorXd Td3Agent::compute_targets(const Batch& batch, std::mt19937_64& rng) const {
  Eigen::MatrixXd next_action = actor_target.forward(batch.next_obs);
  std::normal_distribution<double> normal(0.0, cfg_.target_noise);
  for (Eigen::Index j = 0; j < next_action.cols(); ++j) {
    for (Eigen::Index i = 0; i < next_action.rows(); ++i) {
      const double eps =
          std::clamp(normal(rng), -cfg_.target_noise_clip, cfg_.target_noise_clip);
      next_action(i, j) = std::clamp(next_action(i, j) + eps, -1.0, 1.0);
    }
  }
  const Eigen::MatrixXd input = stack(batch.next_obs, next_action);
  const Eigen::VectorXd q1 = critic1_target.forward(input).row(0).transpose();
  const Eigen::VectorXd q2 = critic2_target.forward(input).row(0).transpose();
  return bellman_target(batch.reward, batch.done, q1.cwiseMin(q2), cfg_.gamma);
}

UpdateRecord Td3Agent::update(const Batch& batch, std::mt19937_64& rng) {
  UpdateRecord rec;
  const Eigen::VectorXd y = compute_targets(batch, rng);
  const Eigen::MatrixXd input = stack(batch.obs, batch.action);
  rec.critic_loss = 0.5 * (detail::fit_critic(critic1, critic1_opt_, input, y) +
                           detail::fit_critic(critic2, critic2_opt_, input, y));
  ++critic_updates_;
  if (critic_updates_ % cfg_.policy_delay != 0) return rec;

  nn::Tape actor_tape, critic_tape;
  const Eigen::MatrixXd a = actor.forward(batch.obs, &actor_tape);
  const Eigen::MatrixXd q = critic1.forward(stack(batch.obs, a), &critic_tape);
  const double n = static_cast<double>(batch.size());
  rec.actor_loss = -q.mean();
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, q.cols(), -1.0 / n);
  const nn::Gradients cg = critic1.backward(critic_tape, dq);
  const Eigen::MatrixXd g_a = cg.input.bottomRows(a.rows());
  actor_opt_.step(actor, actor.backward(actor_tape, g_a));
  ++actor_updates_;

  nn::soft_update(actor_target, actor, cfg_.tau);
  nn::soft_update(critic1_target, critic1, cfg_.tau);
  nn::soft_update(critic2_target, critic2, cfg_.tau);
  return rec;
}

Policy Td3Agent::snapshot() const { return Policy(Algorithm::kTD3, actor); }

}  // namespace msched
