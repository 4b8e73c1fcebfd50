#include "msched/algos.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "msched/errors.hpp"

namespace msched {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kDDPG:
      return "DDPG";
    case Algorithm::kTD3:
      return "TD3";
    case Algorithm::kSAC:
      return "SAC";
    case Algorithm::kPPO:
      break;
  }
  return "PPO";
}

Algorithm parse_algorithm(const std::string& text) {
  std::string up = text;
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "DDPG") return Algorithm::kDDPG;
  if (up == "TD3") return Algorithm::kTD3;
  if (up == "SAC") return Algorithm::kSAC;
  if (up == "PPO") return Algorithm::kPPO;
  throw UsageError("unknown algorithm: " + text);
}

void AlgoConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(episodes >= 0, "episodes must be non-negative");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(batch_size > 0, "batch_size must be positive");
  require(buffer_capacity >= batch_size, "buffer_capacity must be at least batch_size");
  require(warmup_steps >= 0, "warmup_steps must be non-negative");
  require(reward_scale > 0.0, "reward_scale must be positive");
  require(!hidden.empty(), "at least one hidden layer is required");
  require(actor_lr > 0.0 && critic_lr > 0.0 && alpha_lr > 0.0, "learning rates must be positive");
  require(policy_delay >= 1, "policy_delay must be at least 1");
  require(clip_ratio > 0.0, "clip_ratio must be positive");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(ppo_epochs >= 1 && rollout_length >= 1 && minibatch_size >= 1,
          "PPO epochs, rollout length and minibatch size must be positive");
}

AlgoConfig default_algo_config(Algorithm algorithm) {
  AlgoConfig cfg;
  cfg.algorithm = algorithm;
  return cfg;
}

AlgoConfig apply_algo_config(const KeyValueFile& file, AlgoConfig cfg) {
  static const std::set<std::string> known = {
      "algorithm",     "episodes",          "seed",           "gamma",
      "tau",           "batch_size",        "buffer_capacity", "warmup_steps",
      "reward_scale",  "hidden",            "actor_lr",       "critic_lr",
      "explore_noise_start", "explore_noise_end", "td3_explore_noise", "target_noise",
      "target_noise_clip", "policy_delay",  "auto_alpha",     "alpha",
      "alpha_lr",      "target_entropy",    "clip_ratio",     "gae_lambda",
      "ppo_epochs",    "rollout_length",    "minibatch_size", "value_coef",
      "entropy_coef",  "init_log_std"};
  for (const auto& key : file.keys()) {
    if (key.starts_with("algo.") && !known.contains(key.substr(5))) {
      throw ConfigError("unknown config key: " + key);
    }
  }
  auto num = [&](const char* key, double& field) {
    if (auto v = file.get_double(key)) field = *v;
  };
  auto integer = [&](const char* key, int& field) {
    if (auto v = file.get_int(key)) field = static_cast<int>(*v);
  };
  if (auto v = file.get("algo.algorithm")) cfg.algorithm = parse_algorithm(*v);
  integer("algo.episodes", cfg.episodes);
  if (auto v = file.get_int("algo.seed")) cfg.seed = static_cast<uint64_t>(*v);
  num("algo.gamma", cfg.gamma);
  num("algo.tau", cfg.tau);
  integer("algo.batch_size", cfg.batch_size);
  integer("algo.buffer_capacity", cfg.buffer_capacity);
  integer("algo.warmup_steps", cfg.warmup_steps);
  num("algo.reward_scale", cfg.reward_scale);
  if (auto v = file.get("algo.hidden")) {
    cfg.hidden.clear();
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.hidden.push_back(std::stoi(item));
  }
  num("algo.actor_lr", cfg.actor_lr);
  num("algo.critic_lr", cfg.critic_lr);
  num("algo.explore_noise_start", cfg.explore_noise_start);
  num("algo.explore_noise_end", cfg.explore_noise_end);
  num("algo.td3_explore_noise", cfg.td3_explore_noise);
  num("algo.target_noise", cfg.target_noise);
  num("algo.target_noise_clip", cfg.target_noise_clip);
  integer("algo.policy_delay", cfg.policy_delay);
  if (auto v = file.get_bool("algo.auto_alpha")) cfg.auto_alpha = *v;
  num("algo.alpha", cfg.alpha);
  num("algo.alpha_lr", cfg.alpha_lr);
  num("algo.target_entropy", cfg.target_entropy);
  num("algo.clip_ratio", cfg.clip_ratio);
  num("algo.gae_lambda", cfg.gae_lambda);
  integer("algo.ppo_epochs", cfg.ppo_epochs);
  integer("algo.rollout_length", cfg.rollout_length);
  integer("algo.minibatch_size", cfg.minibatch_size);
  num("algo.value_coef", cfg.value_coef);
  num("algo.entropy_coef", cfg.entropy_coef);
  num("algo.init_log_std", cfg.init_log_std);
  cfg.validate();
  return cfg;
}

Eigen::VectorXd bellman_target(const Eigen::VectorXd& reward, const Eigen::VectorXd& done,
                               const Eigen::VectorXd& q_next, double gamma) {
  return reward.array() + gamma * (1.0 - done.array()) * q_next.array();
}

AdvantageEstimate compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                              const Eigen::VectorXd& dones, double last_value, double gamma,
                              double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw UsageError("compute_gae: rewards, values and dones differ in length");
  }
  AdvantageEstimate out;
  out.advantages.resize(n);
  double running = 0.0;
  for (Eigen::Index t = n; t-- > 0;) {
    const double not_done = 1.0 - dones[t];
    const double next_value = (t + 1 < n) ? values[t + 1] : last_value;
    const double delta = rewards[t] + gamma * not_done * next_value - values[t];
    running = delta + gamma * lambda * not_done * running;
    out.advantages[t] = running;
  }
  out.returns = out.advantages + values;
  return out;
}

SurrogateTerm surrogate_term(double ratio, double advantage, double clip) {
  SurrogateTerm s;
  s.unclipped = ratio * advantage;
  const double clipped_ratio = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  s.clipped = std::min(s.unclipped, clipped_ratio * advantage);
  const bool outside = (advantage >= 0.0 && ratio > 1.0 + clip) ||
                       (advantage < 0.0 && ratio < 1.0 - clip);
  s.grad = outside ? 0.0 : ratio * advantage;
  return s;
}

Policy::Policy(Algorithm algorithm, nn::Mlp actor, Eigen::VectorXd log_std)
    : algorithm_(algorithm), actor_(std::move(actor)), log_std_(std::move(log_std)) {}

Eigen::VectorXd Policy::act(const Eigen::VectorXd& obs) const {
  const Eigen::VectorXd out = actor_.predict(obs);
  switch (algorithm_) {
    case Algorithm::kDDPG:
    case Algorithm::kTD3:
      return out.cwiseMax(-1.0).cwiseMin(1.0);
    case Algorithm::kSAC:
      return out.head(out.size() / 2).array().tanh();
    case Algorithm::kPPO:
      break;
  }
  return out.array().tanh();
}

void Policy::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write policy file " + path);
  out << "policy " << to_string(algorithm_) << ' ' << log_std_.size();
  char buf[40];
  for (Eigen::Index i = 0; i < log_std_.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %.17g", log_std_[i]);
    out << buf;
  }
  out << '\n';
  actor_.save(out);
}

Policy Policy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read policy file " + path);
  std::string magic, algo;
  Eigen::Index n = 0;
  if (!(in >> magic >> algo >> n) || magic != "policy" || n < 0) {
    throw UsageError("not a policy file: " + path);
  }
  Eigen::VectorXd log_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::string token;
    if (!(in >> token)) throw UsageError("truncated policy file: " + path);
    log_std[i] = std::stod(token);
  }
  return Policy(parse_algorithm(algo), nn::Mlp::load(in), log_std);
}

}  // namespace msched
