#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>

#include "msched/algos.hpp"
#include "msched/errors.hpp"

namespace msched {
namespace {

RawAction to_raw(const Eigen::VectorXd& a, size_t num_dg) {
  RawAction raw;
  raw.dg.assign(a.data(), a.data() + num_dg);
  raw.ess = a[static_cast<Eigen::Index>(num_dg)];
  return raw;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Independent streams for the environment (days, initial SOC) and the agent
// (initialization, exploration, minibatches).
std::mt19937_64 stream(uint64_t seed, uint64_t which) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(which)};
  return std::mt19937_64(seq);
}

struct EpisodeStart {
  DaySlice day;
  double soc = 0.0;
};

EpisodeStart draw_episode(const SplitSpec& split, const Profile& profile,
                          const SystemConfig& sys, std::mt19937_64& rng) {
  EpisodeStart e;
  e.day = sample_training_day(split, profile, rng);
  e.soc = std::uniform_real_distribution<double>(sys.ess.e_min, sys.ess.e_max)(rng);
  return e;
}

void accumulate(EpisodeRecord& rec, const StepOutcome& out, double delta_t) {
  rec.reward += out.reward;
  rec.cost += out.cost(delta_t);
  rec.unbalance += out.unbalance;
}

void train_off_policy(OffPolicyAgent& agent, const Profile& profile, const SplitSpec& split,
                      const SystemConfig& sys, const AlgoConfig& cfg, std::mt19937_64& env_rng,
                      std::mt19937_64& agent_rng, TrainReport& report) {
  Environment env(sys);
  ReplayBuffer buffer(static_cast<size_t>(cfg.buffer_capacity));
  const Eigen::Index act_dim = sys.action_dim();
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  long steps = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const EpisodeStart start = draw_episode(split, profile, sys, env_rng);
    Eigen::VectorXd obs = to_eigen(env.reset(start.day, start.soc));
    EpisodeRecord rec;
    const double progress = static_cast<double>(ep) / std::max(1, cfg.episodes);
    while (!env.done()) {
      Eigen::VectorXd a(act_dim);
      if (steps < cfg.warmup_steps) {
        for (Eigen::Index i = 0; i < act_dim; ++i) a[i] = uniform(agent_rng);
      } else {
        a = agent.explore(obs, progress, agent_rng);
      }
      const StepOutcome out = env.step(to_raw(a, sys.num_dg()));
      accumulate(rec, out, sys.delta_t);
      Eigen::VectorXd next = to_eigen(env.observation());
      buffer.push({obs, a, cfg.reward_scale * out.reward, next, out.done});
      obs = std::move(next);
      ++steps;
      if (steps >= cfg.warmup_steps && buffer.size() >= static_cast<size_t>(cfg.batch_size)) {
        report.updates.push_back(
            agent.update(buffer.sample(static_cast<size_t>(cfg.batch_size), agent_rng), agent_rng));
      }
    }
    report.episodes.push_back(rec);
  }
}

void train_ppo(PpoAgent& agent, const Profile& profile, const SplitSpec& split,
               const SystemConfig& sys, const AlgoConfig& cfg, std::mt19937_64& env_rng,
               std::mt19937_64& agent_rng, TrainReport& report) {
  Environment env(sys);
  Rollout rollout;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const EpisodeStart start = draw_episode(split, profile, sys, env_rng);
    Eigen::VectorXd obs = to_eigen(env.reset(start.day, start.soc));
    EpisodeRecord rec;
    while (!env.done()) {
      const PpoAgent::Sample s = agent.sample(obs, agent_rng);
      const StepOutcome out = env.step(to_raw(s.action, sys.num_dg()));
      accumulate(rec, out, sys.delta_t);
      rollout.obs.push_back(obs);
      rollout.pre_squash.push_back(s.pre_squash);
      rollout.log_prob.push_back(s.log_prob);
      rollout.value.push_back(s.value);
      rollout.reward.push_back(cfg.reward_scale * out.reward);
      rollout.done.push_back(out.done ? 1.0 : 0.0);
      obs = to_eigen(env.observation());
    }
    report.episodes.push_back(rec);
    const bool last = ep + 1 == cfg.episodes;
    if (rollout.size() >= static_cast<size_t>(cfg.rollout_length) || (last && rollout.size())) {
      rollout.last_value = 0.0;
      auto recs = agent.update(rollout, agent_rng);
      report.updates.insert(report.updates.end(), recs.begin(), recs.end());
      rollout.clear();
    }
  }
}

}  // namespace

TrainResult train(const Profile& profile, const SplitSpec& split, SystemConfig sys,
                  const AlgoConfig& cfg) {
  cfg.validate();
  sys.obs_scale.pv_max = std::max(profile.pv_max(), 1e-9);
  sys.obs_scale.load_max = std::max(profile.load_max(), 1e-9);
  sys.validate();
  if (split.train_days.empty()) throw UsageError("training split is empty");

  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 env_rng = stream(cfg.seed, 1);
  std::mt19937_64 agent_rng = stream(cfg.seed, 2);
  const int obs_dim = static_cast<int>(sys.observation_dim());
  const int act_dim = static_cast<int>(sys.action_dim());

  TrainResult result;
  result.report.algorithm = cfg.algorithm;
  result.report.seed = cfg.seed;
  if (cfg.algorithm == Algorithm::kPPO) {
    PpoAgent agent(obs_dim, act_dim, cfg, agent_rng);
    train_ppo(agent, profile, split, sys, cfg, env_rng, agent_rng, result.report);
    result.policy = agent.snapshot();
  } else {
    std::unique_ptr<OffPolicyAgent> agent;
    switch (cfg.algorithm) {
      case Algorithm::kDDPG:
        agent = std::make_unique<DdpgAgent>(obs_dim, act_dim, cfg, agent_rng);
        break;
      case Algorithm::kTD3:
        agent = std::make_unique<Td3Agent>(obs_dim, act_dim, cfg, agent_rng);
        break;
      default:
        agent = std::make_unique<SacAgent>(obs_dim, act_dim, cfg, agent_rng);
        break;
    }
    train_off_policy(*agent, profile, split, sys, cfg, env_rng, agent_rng, result.report);
    result.policy = agent->snapshot();
  }
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

void write_train_report_csv(const std::string& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << "episode,reward,cost,unbalance\n";
  char buf[128];
  for (size_t i = 0; i < report.episodes.size(); ++i) {
    const EpisodeRecord& e = report.episodes[i];
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", i, e.reward, e.cost, e.unbalance);
    out << buf;
  }
}

std::vector<DayEvaluation> evaluate_policy(const ActionFn& policy,
                                           const std::vector<DaySlice>& days, double soc_init,
                                           const SystemConfig& sys) {
  std::vector<DayEvaluation> results;
  results.reserve(days.size());
  for (const DaySlice& day : days) {
    DayEvaluation ev;
    ev.day = day.day_index;
    ev.schedule.soc_init = soc_init;
    EnvState state = reset(day, soc_init, sys);
    for (int t = 0; t < sys.horizon; ++t) {
      const std::vector<double> obs = observe(state, day, sys);
      const Eigen::VectorXd a = policy(state, to_eigen(obs));
      if (a.size() != static_cast<Eigen::Index>(sys.action_dim())) {
        throw UsageError("policy returned an action of the wrong dimension");
      }
      const StepOutcome out = step(state, to_raw(a, sys.num_dg()), day, sys);
      ScheduleStep s;
      s.dg_on = out.applied.dg_on;
      s.dg_power = out.applied.dg_power;
      s.ess_power = out.applied.ess_power;
      s.grid_power = out.grid_power;
      s.unbalance = out.unbalance;
      s.step_cost = out.cost(sys.delta_t);
      s.soc = out.next_state.soc;
      ev.schedule.steps.push_back(std::move(s));
      ev.rollout_cost += out.cost(sys.delta_t);
      ev.rollout_unbalance += out.unbalance;
      state = out.next_state;
    }
    const ScheduleEvaluation check = evaluate_schedule(ev.schedule, day, sys);
    ev.cost = check.total_cost;
    ev.unbalance = check.total_unbalance;
    ev.feasible = check.feasible;
    results.push_back(std::move(ev));
  }
  return results;
}

std::vector<DayEvaluation> evaluate_policy(const Policy& policy,
                                           const std::vector<DaySlice>& days, double soc_init,
                                           const SystemConfig& sys) {
  return evaluate_policy(
      [&policy](const EnvState&, const Eigen::VectorXd& obs) { return policy.act(obs); }, days,
      soc_init, sys);
}

RawAction raw_action_for(const ScheduleStep& step, const SystemConfig& sys) {
  RawAction raw;
  raw.dg.assign(sys.num_dg(), -1.0);
  for (size_t i = 0; i < sys.num_dg(); ++i) {
    if (!step.dg_on[i]) continue;
    const DGUnit& u = sys.dg_units[i];
    const double span = u.p_max - u.p_min;
    const double frac = span > 0.0 ? (step.dg_power[i] - u.p_min) / span : 1.0;
    raw.dg[i] = sys.commit_threshold + frac * (1.0 - sys.commit_threshold);
  }
  raw.ess = sys.ess.p_limit > 0.0 ? step.ess_power / sys.ess.p_limit : 0.0;
  return raw;
}

}  // namespace msched
