#include <cmath>
#include <numbers>

#include "agent_util.hpp"
#include "msched/algos.hpp"

namespace msched {

using detail::layer_sizes;
using detail::stack;

namespace {

constexpr double kActionBound = 1.0 - 1e-12;

// Reparameterized tanh-Gaussian batch: columns are samples.
struct SquashedBatch {
  Eigen::ArrayXXd noise;
  Eigen::ArrayXXd std;
  Eigen::ArrayXXd action;
  Eigen::ArrayXXd clamp_mask;  // 1 where log_std was inside the clamp range
  Eigen::RowVectorXd log_prob;
};

SquashedBatch squash(const Eigen::MatrixXd& head, int action_dim, std::mt19937_64& rng) {
  const Eigen::Index n = head.cols();
  SquashedBatch s;
  const Eigen::ArrayXXd mean = head.topRows(action_dim).array();
  const Eigen::ArrayXXd raw_ls = head.bottomRows(action_dim).array();
  const Eigen::ArrayXXd ls = raw_ls.cwiseMax(nn::kLogStdMin).cwiseMin(nn::kLogStdMax);
  s.clamp_mask = (raw_ls >= nn::kLogStdMin && raw_ls <= nn::kLogStdMax).cast<double>();
  s.std = ls.exp();
  s.noise.resize(action_dim, n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < action_dim; ++i) s.noise(i, j) = normal(rng);
  }
  s.action = (mean + s.std * s.noise).tanh().cwiseMax(-kActionBound).cwiseMin(kActionBound);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  s.log_prob = (-0.5 * s.noise.square() - ls - half_log_2pi -
                (1.0 - s.action.square() + nn::kTanhEps).log())
                   .colwise()
                   .sum()
                   .matrix();
  return s;
}

}  // namespace

SacAgent::SacAgent(int obs_dim, int action_dim, const AlgoConfig& cfg, std::mt19937_64& rng)
    : actor(layer_sizes(obs_dim, cfg.hidden, 2 * action_dim), nn::Activation::kReLU,
            nn::Activation::kIdentity, rng, 0.01),
      critic1(detail::make_critic(obs_dim, action_dim, cfg, rng)),
      critic2(detail::make_critic(obs_dim, action_dim, cfg, rng)),
      critic1_target(critic1),
      critic2_target(critic2),
      cfg_(cfg),
      action_dim_(action_dim),
      log_alpha_(std::log(cfg.alpha)),
      target_entropy_(cfg.target_entropy != 0.0 ? cfg.target_entropy
                                                : -static_cast<double>(action_dim)),
      actor_opt_(detail::make_adam(actor, cfg.actor_lr)),
      critic1_opt_(detail::make_adam(critic1, cfg.critic_lr)),
      critic2_opt_(detail::make_adam(critic2, cfg.critic_lr)),
      alpha_opt_(1, nn::AdamOptions{cfg.alpha_lr, 0.9, 0.999, 1e-8}) {}

double SacAgent::alpha() const { return std::exp(log_alpha_); }

Eigen::VectorXd SacAgent::explore(const Eigen::VectorXd& obs, double, std::mt19937_64& rng) {
  const Eigen::VectorXd head = actor.predict(obs);
  return nn::gaussian_sample(head.head(action_dim_), head.tail(action_dim_), rng).action;
}

Eigen::VectorXd SacAgent::compute_targets(const Batch& batch, std::mt19937_64& rng) const {
  const SquashedBatch next = squash(actor.forward(batch.next_obs), action_dim_, rng);
  const Eigen::MatrixXd input = stack(batch.next_obs, next.action.matrix());
  const Eigen::VectorXd q1 = critic1_target.forward(input).row(0).transpose();
  const Eigen::VectorXd q2 = critic2_target.forward(input).row(0).transpose();
  const Eigen::VectorXd soft_q = q1.cwiseMin(q2) - alpha() * next.log_prob.transpose();
  return bellman_target(batch.reward, batch.done, soft_q, cfg_.gamma);
}

UpdateRecord SacAgent::update(const Batch& batch, std::mt19937_64& rng) {
  UpdateRecord rec;
  const Eigen::VectorXd y = compute_targets(batch, rng);
  const Eigen::MatrixXd input = stack(batch.obs, batch.action);
  rec.critic_loss = 0.5 * (detail::fit_critic(critic1, critic1_opt_, input, y) +
                           detail::fit_critic(critic2, critic2_opt_, input, y));

  const double n = static_cast<double>(batch.size());
  const double a_coef = alpha();
  nn::Tape actor_tape, tape1, tape2;
  const Eigen::MatrixXd head = actor.forward(batch.obs, &actor_tape);
  const SquashedBatch s = squash(head, action_dim_, rng);
  const Eigen::MatrixXd policy_input = stack(batch.obs, s.action.matrix());
  const Eigen::MatrixXd q1 = critic1.forward(policy_input, &tape1);
  const Eigen::MatrixXd q2 = critic2.forward(policy_input, &tape2);
  const Eigen::ArrayXXd use1 = (q1.array() <= q2.array()).cast<double>();
  const Eigen::MatrixXd dq1 = (-use1 / n).matrix();
  const Eigen::MatrixXd dq2 = (-(1.0 - use1) / n).matrix();
  const Eigen::MatrixXd q_min = q1.cwiseMin(q2);
  rec.actor_loss = (a_coef * s.log_prob.array() - q_min.row(0).array()).mean();

  const Eigen::ArrayXXd g_a = (critic1.backward(tape1, dq1).input.bottomRows(action_dim_) +
                               critic2.backward(tape2, dq2).input.bottomRows(action_dim_))
                                  .array();
  const Eigen::ArrayXXd one_minus_a2 = 1.0 - s.action.square();
  const Eigen::ArrayXXd g_u =
      g_a * one_minus_a2 +
      (a_coef / n) * 2.0 * s.action * one_minus_a2 / (one_minus_a2 + nn::kTanhEps);
  Eigen::MatrixXd grad_head(2 * action_dim_, head.cols());
  grad_head.topRows(action_dim_) = g_u.matrix();
  grad_head.bottomRows(action_dim_) = ((g_u * s.std * s.noise - a_coef / n) * s.clamp_mask).matrix();
  actor_opt_.step(actor, actor.backward(actor_tape, grad_head));

  if (cfg_.auto_alpha) {
    const double grad = -(s.log_prob.array() + target_entropy_).mean();
    alpha_opt_.step(std::span<double>(&log_alpha_, 1), std::span<const double>(&grad, 1));
  }

  nn::soft_update(critic1_target, critic1, cfg_.tau);
  nn::soft_update(critic2_target, critic2, cfg_.tau);
  return rec;
}

Policy SacAgent::snapshot() const { return Policy(Algorithm::kSAC, actor); }

}  // namespace msched
