// Command-line front end for the scheduling experiments.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include "msched/bench.hpp"
#include "msched/errors.hpp"

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Accepts "0,1,2" and inclusive ranges such as "0-4".
std::vector<long> parse_int_list(const std::string& text) {
  std::vector<long> out;
  for (const std::string& item : split_list(text)) {
    const size_t dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(std::stol(item));
    } else {
      const long lo = std::stol(item.substr(0, dash));
      const long hi = std::stol(item.substr(dash + 1));
      if (hi < lo) throw msched::UsageError("empty range " + item);
      for (long v = lo; v <= hi; ++v) out.push_back(v);
    }
  }
  return out;
}

struct Options {
  std::string config;
  std::string data = "synth:7";
  std::string algos;
  std::string seeds;
  std::string sigma2;
  std::string days;
  std::string out = "out";
  int jobs = 1;
  int episodes = -1;
};

msched::ExperimentSpec build_spec(const Options& o, msched::ExperimentKind kind) {
  msched::ExperimentSpec spec;
  spec.kind = kind;
  if (!o.config.empty()) {
    msched::apply_experiment_config(msched::KeyValueFile::load(o.config), spec);
  }
  spec.data_source = o.data;
  spec.out_dir = o.out;
  spec.jobs = o.jobs;
  if (o.episodes >= 0) spec.algo.episodes = o.episodes;
  if (!o.algos.empty()) {
    spec.algorithms.clear();
    for (const auto& a : split_list(o.algos)) spec.algorithms.push_back(msched::parse_algorithm(a));
  }
  if (!o.seeds.empty()) {
    spec.seeds.clear();
    for (long s : parse_int_list(o.seeds)) {
      if (s < 0) throw msched::UsageError("seeds must be non-negative");
      spec.seeds.push_back(static_cast<uint64_t>(s));
    }
  }
  if (!o.sigma2.empty()) {
    spec.sigma2_values.clear();
    for (const auto& v : split_list(o.sigma2)) spec.sigma2_values.push_back(std::stod(v));
    if (kind != msched::ExperimentKind::kSensitivity) spec.system.sigma2 = spec.sigma2_values.front();
  }
  if (!o.days.empty()) {
    for (long d : parse_int_list(o.days)) spec.days.push_back(static_cast<int>(d));
  }
  return spec;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "key = value configuration file");
  cmd->add_option("--data", o.data, "profile CSV path or synth:SEED")->capture_default_str();
  cmd->add_option("--algos", o.algos, "comma-separated subset of DDPG,TD3,SAC,PPO");
  cmd->add_option("--seeds", o.seeds, "comma-separated seeds or ranges (0-4)");
  cmd->add_option("--sigma2", o.sigma2, "penalty coefficient(s), comma-separated");
  cmd->add_option("--days", o.days, "evaluation day indices (default: first 10 test days)");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--episodes", o.episodes, "override the training episode count");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microgrid scheduling benchmark: DRL agents versus an exact lattice oracle"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "train agents and write learning curves");
  auto* evaluate = app.add_subcommand("evaluate", "cumulative cost/unbalance over evaluation days");
  auto* table = app.add_subcommand("table", "per-day confidence-interval table against the oracle");
  auto* sensitivity = app.add_subcommand("sensitivity", "training curves across sigma2 values");
  auto* schedule = app.add_subcommand("schedule", "hourly schedules of a policy and the oracle");
  auto* oracle = app.add_subcommand("oracle", "solve evaluation days with the lattice oracle only");
  for (auto* cmd : {train, evaluate, table, sensitivity, schedule, oracle}) add_common(cmd, o);

  CLI11_PARSE(app, argc, argv);

  try {
    using msched::ExperimentKind;
    if (*train) {
      const auto exp = msched::run_training_experiment(build_spec(o, ExperimentKind::kTrainCurves));
      for (const auto& c : exp.curves) {
        const size_t n = c.reward.size();
        if (n == 0) continue;
        std::printf("%s: final episode mean reward %.3f, cost %.3f, unbalance %.3f\n",
                    msched::to_string(c.algorithm).c_str(), c.reward[n - 1].mean,
                    c.cost[n - 1].mean, c.unbalance[n - 1].mean);
      }
    } else if (*evaluate) {
      const auto res = msched::run_cumulative_eval(build_spec(o, ExperimentKind::kCumulative));
      for (const auto& s : res.series) {
        if (s.days.empty()) continue;
        std::printf("%-15s cumulative cost %.3f, unbalance %.3f\n", s.contender.c_str(),
                    s.cum_cost.back(), s.cum_unbalance.back());
      }
    } else if (*table) {
      const auto t = msched::run_test_table(build_spec(o, ExperimentKind::kTestTable));
      std::printf("wrote %zu rows to %s/table.csv\n", t.rows.size(), o.out.c_str());
    } else if (*sensitivity) {
      msched::run_sensitivity(build_spec(o, ExperimentKind::kSensitivity));
    } else if (*schedule) {
      msched::dump_schedule(build_spec(o, ExperimentKind::kScheduleDump));
    } else if (*oracle) {
      for (const auto& d : msched::run_oracle_only(build_spec(o, ExperimentKind::kOracleOnly))) {
        std::printf("day %d: penalty objective %.3f (cost %.3f, unbalance %.3f), hard %s\n", d.day,
                    d.penalty.objective, d.penalty.total_cost, d.penalty.total_unbalance,
                    d.hard.feasible ? "feasible" : "infeasible");
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "msched: %s\n", e.what());
    return 1;
  }
  return 0;
}
