#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "agent_util.hpp"
#include "msched/algos.hpp"
#include "msched/errors.hpp"

namespace msched {

using detail::layer_sizes;

PpoAgent::PpoAgent(int obs_dim, int action_dim, const AlgoConfig& cfg, std::mt19937_64& rng)
    : actor(layer_sizes(obs_dim, cfg.hidden, action_dim), nn::Activation::kReLU,
            nn::Activation::kIdentity, rng, 0.01),
      critic(layer_sizes(obs_dim, cfg.hidden, 1), nn::Activation::kReLU,
             nn::Activation::kIdentity, rng),
      log_std(Eigen::VectorXd::Constant(action_dim, cfg.init_log_std)),
      cfg_(cfg),
      actor_opt_(detail::make_adam(actor, cfg.actor_lr)),
      critic_opt_(detail::make_adam(critic, cfg.critic_lr)),
      log_std_opt_(static_cast<size_t>(action_dim), nn::AdamOptions{cfg.actor_lr, 0.9, 0.999, 1e-8}) {}

PpoAgent::Sample PpoAgent::sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const {
  const Eigen::VectorXd mean = actor.predict(obs);
  const nn::GaussianSample g = nn::gaussian_sample(mean, log_std, rng);
  Sample s;
  s.action = g.action;
  s.pre_squash = g.pre_squash;
  s.log_prob = nn::gaussian_log_density(mean, log_std, g.pre_squash);
  s.value = value(obs);
  return s;
}

double PpoAgent::value(const Eigen::VectorXd& obs) const { return critic.predict(obs)[0]; }

double PpoAgent::log_density(const Eigen::VectorXd& obs, const Eigen::VectorXd& pre_squash) const {
  return nn::gaussian_log_density(actor.predict(obs), log_std, pre_squash);
}

std::vector<UpdateRecord> PpoAgent::update(const Rollout& rollout, std::mt19937_64& rng) {
  const size_t n = rollout.size();
  if (n == 0) throw UsageError("PPO update on an empty rollout");
  const Eigen::Index obs_dim = actor.input_size();
  const Eigen::Index act_dim = actor.output_size();

  auto to_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))
        .eval();
  };
  AdvantageEstimate est = compute_gae(to_vec(rollout.reward), to_vec(rollout.value),
                                      to_vec(rollout.done), rollout.last_value, cfg_.gamma,
                                      cfg_.gae_lambda);
  Eigen::VectorXd adv = est.advantages;
  if (n > 1) {
    const double mu = adv.mean();
    const double sd = std::sqrt((adv.array() - mu).square().sum() / static_cast<double>(n - 1));
    adv = (adv.array() - mu) / (sd + 1e-8);
  }

  Eigen::MatrixXd obs(obs_dim, static_cast<Eigen::Index>(n));
  Eigen::MatrixXd pre(act_dim, static_cast<Eigen::Index>(n));
  for (size_t k = 0; k < n; ++k) {
    obs.col(static_cast<Eigen::Index>(k)) = rollout.obs[k];
    pre.col(static_cast<Eigen::Index>(k)) = rollout.pre_squash[k];
  }

  std::vector<UpdateRecord> records;
  std::vector<size_t> order(n);
  const size_t mb = std::min<size_t>(static_cast<size_t>(cfg_.minibatch_size), n);
  for (int epoch = 0; epoch < cfg_.ppo_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < n; start += mb) {
      const size_t stop = std::min(n, start + mb);
      const auto b = static_cast<Eigen::Index>(stop - start);
      const double bn = static_cast<double>(b);
      Eigen::MatrixXd x(obs_dim, b), u(act_dim, b);
      Eigen::VectorXd a(b), ret(b), old_lp(b);
      for (Eigen::Index j = 0; j < b; ++j) {
        const size_t k = order[start + static_cast<size_t>(j)];
        x.col(j) = obs.col(static_cast<Eigen::Index>(k));
        u.col(j) = pre.col(static_cast<Eigen::Index>(k));
        a[j] = adv[static_cast<Eigen::Index>(k)];
        ret[j] = est.returns[static_cast<Eigen::Index>(k)];
        old_lp[j] = rollout.log_prob[k];
      }

      const Eigen::VectorXd ls = nn::clamp_log_std(log_std);
      const Eigen::ArrayXd inv_var = (-2.0 * ls.array()).exp();
      nn::Tape actor_tape;
      const Eigen::MatrixXd mean = actor.forward(x, &actor_tape);
      Eigen::MatrixXd grad_mean(act_dim, b);
      Eigen::VectorXd grad_ls = Eigen::VectorXd::Zero(act_dim);
      double surrogate = 0.0;
      for (Eigen::Index j = 0; j < b; ++j) {
        const Eigen::ArrayXd diff = (u.col(j) - mean.col(j)).array();
        const Eigen::ArrayXd z2 = diff.square() * inv_var;
        const double new_lp =
            (-0.5 * z2 - ls.array() - 0.5 * std::log(2.0 * std::numbers::pi)).sum();
        const SurrogateTerm term = surrogate_term(std::exp(new_lp - old_lp[j]), a[j],
                                                  cfg_.clip_ratio);
        surrogate += term.clipped;
        const double g = -term.grad / bn;
        grad_mean.col(j) = (g * diff * inv_var).matrix();
        grad_ls += (g * (z2 - 1.0)).matrix();
      }
      grad_ls.array() -= cfg_.entropy_coef;
      for (Eigen::Index i = 0; i < act_dim; ++i) {
        if (log_std[i] < nn::kLogStdMin || log_std[i] > nn::kLogStdMax) grad_ls[i] = 0.0;
      }
      actor_opt_.step(actor, actor.backward(actor_tape, grad_mean));
      log_std_opt_.step(std::span<double>(log_std.data(), static_cast<size_t>(act_dim)),
                        std::span<const double>(grad_ls.data(), static_cast<size_t>(act_dim)));

      nn::Tape critic_tape;
      const Eigen::MatrixXd v = critic.forward(x, &critic_tape);
      const Eigen::RowVectorXd err = v.row(0) - ret.transpose();
      critic_opt_.step(critic, critic.backward(critic_tape, cfg_.value_coef * err / bn));

      UpdateRecord rec;
      rec.actor_loss = -surrogate / bn;
      rec.critic_loss = 0.5 * err.squaredNorm() / bn;
      records.push_back(rec);
    }
  }
  return records;
}

Policy PpoAgent::snapshot() const { return Policy(Algorithm::kPPO, actor, log_std); }

}  // namespace msched
