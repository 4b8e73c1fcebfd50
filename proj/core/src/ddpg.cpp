#include "agent_util.hpp"
#include "msched/algos.hpp"

namespace msched {

using detail::layer_sizes;
using detail::stack;

DdpgAgent::DdpgAgent(int obs_dim, int action_dim, const AlgoConfig& cfg, std::mt19937_64& rng)
    : actor(layer_sizes(obs_dim, cfg.hidden, action_dim), nn::Activation::kReLU,
            nn::Activation::kTanh, rng, 0.01),
      critic(detail::make_critic(obs_dim, action_dim, cfg, rng)),
      actor_target(actor),
      critic_target(critic),
      cfg_(cfg),
      actor_opt_(detail::make_adam(actor, cfg.actor_lr)),
      critic_opt_(detail::make_adam(critic, cfg.critic_lr)) {}

Eigen::VectorXd DdpgAgent::explore(const Eigen::VectorXd& obs, double progress,
                                   std::mt19937_64& rng) {
  const double p = std::clamp(progress, 0.0, 1.0);
  const double sigma =
      cfg_.explore_noise_start + p * (cfg_.explore_noise_end - cfg_.explore_noise_start);
  const Eigen::VectorXd a = actor.predict(obs);
  return (a + detail::gaussian_noise(a.size(), sigma, rng)).cwiseMax(-1.0).cwiseMin(1.0);
}

Eigen::VectorXd DdpgAgent::compute_targets(const Batch& batch, std::mt19937_64&) const {
  const Eigen::MatrixXd next_action = actor_target.forward(batch.next_obs);
  const Eigen::VectorXd q_next =
      critic_target.forward(stack(batch.next_obs, next_action)).row(0).transpose();
  return bellman_target(batch.reward, batch.done, q_next, cfg_.gamma);
}

UpdateRecord DdpgAgent::update(const Batch& batch, std::mt19937_64& rng) {
  UpdateRecord rec;
  const Eigen::VectorXd y = compute_targets(batch, rng);
  rec.critic_loss = detail::fit_critic(critic, critic_opt_, stack(batch.obs, batch.action), y);

  nn::Tape actor_tape, critic_tape;
  const Eigen::MatrixXd a = actor.forward(batch.obs, &actor_tape);
  const Eigen::MatrixXd q = critic.forward(stack(batch.obs, a), &critic_tape);
  const double n = static_cast<double>(batch.size());
  rec.actor_loss = -q.mean();
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, q.cols(), -1.0 / n);
  const nn::Gradients cg = critic.backward(critic_tape, dq);
  const Eigen::MatrixXd g_a = cg.input.bottomRows(a.rows());
  actor_opt_.step(actor, actor.backward(actor_tape, g_a));

  nn::soft_update(actor_target, actor, cfg_.tau);
  nn::soft_update(critic_target, critic, cfg_.tau);
  return rec;
}

Policy DdpgAgent::snapshot() const { return Policy(Algorithm::kDDPG, actor); }

}  // namespace msched
