#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "msched/config.hpp"
#include "msched/data.hpp"
#include "msched/env.hpp"
#include "msched/nn.hpp"
#include "msched/oracle.hpp"

namespace msched {

enum class Algorithm { kDDPG, kTD3, kSAC, kPPO };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& text);

struct AlgoConfig {
  Algorithm algorithm = Algorithm::kPPO;
  int episodes = 1000;
  uint64_t seed = 0;

  double gamma = 0.99;
  double tau = 0.005;
  int batch_size = 128;
  int buffer_capacity = 100'000;
  int warmup_steps = 500;
  // Environment rewards are multiplied by this before entering any loss. The
  // reported rewards are unscaled.
  double reward_scale = 0.01;
  std::vector<int> hidden = {64, 64};
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;

  // DDPG: Gaussian action noise decaying linearly over training.
  double explore_noise_start = 0.1;
  double explore_noise_end = 0.01;
  // TD3
  double td3_explore_noise = 0.1;
  double target_noise = 0.2;
  double target_noise_clip = 0.5;
  int policy_delay = 2;
  // SAC
  bool auto_alpha = true;
  double alpha = 0.2;           // initial value when auto_alpha
  double alpha_lr = 3e-4;
  double target_entropy = 0.0;  // 0 selects -action_dim
  // PPO
  double clip_ratio = 0.2;
  double gae_lambda = 0.95;
  int ppo_epochs = 10;
  int rollout_length = 240;
  int minibatch_size = 60;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double init_log_std = -0.5;

  void validate() const;
};

AlgoConfig default_algo_config(Algorithm algorithm);
// Reads `algo.*` keys (e.g. algo.gamma, algo.batch_size, algo.hidden = 64,64).
AlgoConfig apply_algo_config(const KeyValueFile& file, AlgoConfig base);

struct Transition {
  Eigen::VectorXd obs;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_obs;
  bool done = false;
};

// Column-per-sample minibatch.
struct Batch {
  Eigen::MatrixXd obs;
  Eigen::MatrixXd action;
  Eigen::VectorXd reward;
  Eigen::MatrixXd next_obs;
  Eigen::VectorXd done;

  Eigen::Index size() const { return reward.size(); }
};

// Bounded FIFO with uniform sampling (with replacement).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);

  void push(Transition t);
  size_t size() const { return data_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return data_[i]; }

  std::vector<size_t> sample_indices(size_t batch_size, std::mt19937_64& rng) const;
  Batch sample(size_t batch_size, std::mt19937_64& rng) const;
  Batch gather(const std::vector<size_t>& indices) const;

 private:
  size_t capacity_;
  size_t next_ = 0;
  std::vector<Transition> data_;
};

// y = r + gamma * (1 - done) * q_next, element-wise.
Eigen::VectorXd bellman_target(const Eigen::VectorXd& reward, const Eigen::VectorXd& done,
                               const Eigen::VectorXd& q_next, double gamma);

// Generalized advantage estimation over a trajectory batch. last_value
// bootstraps the step after the final entry when it is not terminal.
struct AdvantageEstimate {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};
AdvantageEstimate compute_gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                              const Eigen::VectorXd& dones, double last_value, double gamma,
                              double lambda);

// One sample's contribution to the clipped surrogate objective.
struct SurrogateTerm {
  double clipped = 0.0;    // min(r A, clip(r) A)
  double unclipped = 0.0;  // r A
  double grad = 0.0;       // d clipped / d log pi
};
SurrogateTerm surrogate_term(double ratio, double advantage, double clip);

// Deterministic policy used for evaluation and persisted to disk.
class Policy {
 public:
  Policy() = default;
  Policy(Algorithm algorithm, nn::Mlp actor, Eigen::VectorXd log_std = {});

  Algorithm algorithm() const { return algorithm_; }
  const nn::Mlp& actor() const { return actor_; }

  // Action in [-1, 1]^action_dim: actor output for DDPG/TD3, tanh(mean) for
  // SAC/PPO.
  Eigen::VectorXd act(const Eigen::VectorXd& obs) const;

  void save(const std::string& path) const;
  static Policy load(const std::string& path);

 private:
  Algorithm algorithm_ = Algorithm::kPPO;
  nn::Mlp actor_;
  Eigen::VectorXd log_std_;
};

struct UpdateRecord {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

// Shared by the three replay-based agents.
class OffPolicyAgent {
 public:
  virtual ~OffPolicyAgent() = default;
  // progress in [0, 1] is the fraction of training completed.
  virtual Eigen::VectorXd explore(const Eigen::VectorXd& obs, double progress,
                                  std::mt19937_64& rng) = 0;
  virtual Eigen::VectorXd compute_targets(const Batch& batch, std::mt19937_64& rng) const = 0;
  virtual UpdateRecord update(const Batch& batch, std::mt19937_64& rng) = 0;
  virtual Policy snapshot() const = 0;
};

class DdpgAgent : public OffPolicyAgent {
 public:
  DdpgAgent(int obs_dim, int action_dim, const AlgoConfig& cfg, std::mt19937_64& rng);

  Eigen::VectorXd explore(const Eigen::VectorXd& obs, double progress,
                          std::mt19937_64& rng) override;
  Eigen::VectorXd compute_targets(const Batch& batch, std::mt19937_64& rng) const override;
  UpdateRecord update(const Batch& batch, std::mt19937_64& rng) override;
  Policy snapshot() const override;

  nn::Mlp actor, critic, actor_target, critic_target;

 private:
  AlgoConfig cfg_;
  nn::Adam actor_opt_, critic_opt_;
};

class Td3Agent : public OffPolicyAgent {
 public:
  Td3Agent(int obs_dim, int action_dim, const AlgoConfig& cfg, std::mt19937_64& rng);

  Eigen::VectorXd explore(const Eigen::VectorXd& obs, double progress,
                          std::mt19937_64& rng) override;
  Eigen::VectorXd compute_targets(const Batch& batch, std::mt19937_64& rng) const override;
  UpdateRecord update(const Batch& batch, std::mt19937_64& rng) override;
  Policy snapshot() const override;

  long critic_updates() const { return critic_updates_; }
  long actor_updates() const { return actor_updates_; }

  nn::Mlp actor, critic1, critic2, actor_target, critic1_target, critic2_target;

 private:
  AlgoConfig cfg_;
  nn::Adam actor_opt_, critic1_opt_, critic2_opt_;
  long critic_updates_ = 0;
  long actor_updates_ = 0;
};

class SacAgent : public OffPolicyAgent {
 public:
  SacAgent(int obs_dim, int action_dim, const AlgoConfig& cfg, std::mt19937_64& rng);

  Eigen::VectorXd explore(const Eigen::VectorXd& obs, double progress,
                          std::mt19937_64& rng) override;
  Eigen::VectorXd compute_targets(const Batch& batch, std::mt19937_64& rng) const override;
  UpdateRecord update(const Batch& batch, std::mt19937_64& rng) override;
  Policy snapshot() const override;

  double alpha() const;
  double target_entropy() const { return target_entropy_; }

  // Actor output is [mean; log_std], 2 * action_dim rows.
  nn::Mlp actor, critic1, critic2, critic1_target, critic2_target;

 private:
  AlgoConfig cfg_;
  int action_dim_;
  double log_alpha_;
  double target_entropy_;
  nn::Adam actor_opt_, critic1_opt_, critic2_opt_, alpha_opt_;
};

// Episode-aligned on-policy storage for PPO.
struct Rollout {
  std::vector<Eigen::VectorXd> obs;
  std::vector<Eigen::VectorXd> pre_squash;
  std::vector<double> log_prob;  // Gaussian density of pre_squash at collection time
  std::vector<double> value;
  std::vector<double> reward;    // already scaled
  std::vector<double> done;
  double last_value = 0.0;

  size_t size() const { return reward.size(); }
  void clear() { *this = Rollout{}; }
};

class PpoAgent {
 public:
  PpoAgent(int obs_dim, int action_dim, const AlgoConfig& cfg, std::mt19937_64& rng);

  struct Sample {
    Eigen::VectorXd action;
    Eigen::VectorXd pre_squash;
    double log_prob = 0.0;
    double value = 0.0;
  };
  Sample sample(const Eigen::VectorXd& obs, std::mt19937_64& rng) const;
  double value(const Eigen::VectorXd& obs) const;
  double log_density(const Eigen::VectorXd& obs, const Eigen::VectorXd& pre_squash) const;

  std::vector<UpdateRecord> update(const Rollout& rollout, std::mt19937_64& rng);
  Policy snapshot() const;

  nn::Mlp actor, critic;
  Eigen::VectorXd log_std;

 private:
  AlgoConfig cfg_;
  nn::Adam actor_opt_, critic_opt_, log_std_opt_;
};

struct EpisodeRecord {
  double reward = 0.0;     // sum of environment rewards
  double cost = 0.0;       // $, sum of (dg + exchange) * delta_t
  double unbalance = 0.0;  // kW summed over steps
};

struct TrainReport {
  Algorithm algorithm = Algorithm::kPPO;
  uint64_t seed = 0;
  std::vector<EpisodeRecord> episodes;
  std::vector<UpdateRecord> updates;
  double wall_seconds = 0.0;
};

struct TrainResult {
  TrainReport report;
  Policy policy;
};

// Episodes draw a training day and a uniform initial SOC. The observation
// scale of `sys` is replaced by the profile maxima.
TrainResult train(const Profile& profile, const SplitSpec& split, SystemConfig sys,
                  const AlgoConfig& cfg);

// CSV: episode,reward,cost,unbalance
void write_train_report_csv(const std::string& path, const TrainReport& report);

using ActionFn = std::function<Eigen::VectorXd(const EnvState&, const Eigen::VectorXd& obs)>;

struct DayEvaluation {
  int day = 0;
  double cost = 0.0;          // $, rescored by evaluate_schedule
  double unbalance = 0.0;     // kW, rescored by evaluate_schedule
  double rollout_cost = 0.0;  // $, accumulated during the rollout
  double rollout_unbalance = 0.0;
  bool feasible = true;
  Schedule schedule;
};

std::vector<DayEvaluation> evaluate_policy(const ActionFn& policy,
                                           const std::vector<DaySlice>& days, double soc_init,
                                           const SystemConfig& sys);
std::vector<DayEvaluation> evaluate_policy(const Policy& policy,
                                           const std::vector<DaySlice>& days, double soc_init,
                                           const SystemConfig& sys);

// Raw action that projects exactly onto a given schedule step (for replaying
// oracle schedules through the environment).
RawAction raw_action_for(const ScheduleStep& step, const SystemConfig& sys);

}  // namespace msched
