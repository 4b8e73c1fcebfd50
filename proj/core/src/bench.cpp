#include "msched/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "msched/errors.hpp"

namespace msched {
namespace {

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt10(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

std::string sigma_tag(double sigma2) {
  std::string s = fmt6(sigma2);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

std::vector<DaySlice> slices(const ExperimentData& data) {
  std::vector<DaySlice> out;
  for (int d : data.eval_days) out.push_back(data.profile.day(d));
  return out;
}

double eval_soc(const SystemConfig& sys) { return sys.ess.e_max / 2.0; }

// Index of run (algorithm a, seed s) in a TrainingExperiment built by
// run_training_experiment for the same spec.
const TrainResult& find_run(const TrainingExperiment& trained, Algorithm a, uint64_t seed) {
  for (size_t i = 0; i < trained.keys.size(); ++i) {
    if (trained.keys[i].algorithm == a && trained.keys[i].seed == seed) return trained.runs[i];
  }
  throw UsageError("no trained run for " + to_string(a) + " seed " + std::to_string(seed));
}

std::vector<RunKey> grid_keys(const ExperimentSpec& spec, const std::vector<double>& sigmas) {
  std::vector<RunKey> keys;
  for (Algorithm a : spec.algorithms) {
    for (double s2 : sigmas) {
      for (uint64_t seed : spec.seeds) keys.push_back({a, s2, seed});
    }
  }
  return keys;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw UsageError("at least one seed is required");
  if (algorithms.empty() && kind != ExperimentKind::kOracleOnly) {
    throw UsageError("at least one algorithm is required");
  }
  if (kind == ExperimentKind::kSensitivity && sigma2_values.empty()) {
    throw UsageError("the sensitivity sweep needs at least one sigma2 value");
  }
  if (jobs < 1) throw UsageError("jobs must be at least 1");
  if (synth_days < 1) throw UsageError("synth_days must be positive");
  system.validate();
  algo.validate();
}

void apply_experiment_config(const KeyValueFile& file, ExperimentSpec& spec) {
  static const std::set<std::string> known = {"oracle.dg_step", "oracle.ess_step",
                                              "oracle.soc_step", "synth.days"};
  for (const auto& key : file.keys()) {
    if ((key.starts_with("oracle.") || key.starts_with("synth.")) && !known.contains(key)) {
      throw ConfigError("unknown config key: " + key);
    }
  }
  spec.system = apply_system_config(file, spec.system);
  spec.algo = apply_algo_config(file, spec.algo);
  if (auto v = file.get_double("oracle.dg_step")) spec.disc.dg_step = *v;
  if (auto v = file.get_double("oracle.ess_step")) spec.disc.ess_step = *v;
  if (auto v = file.get_double("oracle.soc_step")) spec.disc.soc_step = *v;
  if (auto v = file.get_int("synth.days")) spec.synth_days = static_cast<int>(*v);
}

Profile load_data_source(const std::string& source, int synth_days) {
  const std::string prefix = "synth:";
  if (source.rfind(prefix, 0) == 0) {
    const std::string seed_text = source.substr(prefix.size());
    size_t used = 0;
    unsigned long long seed = 0;
    try {
      seed = std::stoull(seed_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (seed_text.empty() || used != seed_text.size()) {
      throw UsageError("bad synthetic data source '" + source + "', expected synth:SEED");
    }
    return synthesize_profiles(seed, synth_days);
  }
  return load_profiles(source);
}

ExperimentData prepare_data(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentData data;
  data.profile = load_data_source(spec.data_source, spec.synth_days);
  data.split = split_train_test(data.profile);
  data.system = spec.system;
  data.system.obs_scale.pv_max = std::max(data.profile.pv_max(), 1e-9);
  data.system.obs_scale.load_max = std::max(data.profile.load_max(), 1e-9);
  if (spec.days.empty()) {
    const size_t n = std::min<size_t>(10, data.split.test_days.size());
    data.eval_days.assign(data.split.test_days.begin(), data.split.test_days.begin() + n);
  } else {
    for (int d : spec.days) {
      if (d < 0 || d >= data.profile.days()) {
        throw UsageError("day " + std::to_string(d) + " is outside the profile (0.." +
                         std::to_string(data.profile.days() - 1) + ")");
      }
    }
    data.eval_days = spec.days;
  }
  return data;
}

void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn) {
  const size_t workers = std::min<size_t>(std::max(1, jobs), count);
  if (workers <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<TrainResult> train_runs(const ExperimentData& data, const ExperimentSpec& spec,
                                    const std::vector<RunKey>& keys) {
  std::vector<TrainResult> results(keys.size());
  parallel_for(keys.size(), spec.jobs, [&](size_t i) {
    SystemConfig sys = data.system;
    sys.sigma2 = keys[i].sigma2;
    AlgoConfig cfg = spec.algo;
    cfg.algorithm = keys[i].algorithm;
    cfg.seed = keys[i].seed;
    results[i] = train(data.profile, data.split, sys, cfg);
  });
  return results;
}

TrainingCurves aggregate_curves(const std::vector<const TrainReport*>& reports) {
  TrainingCurves c;
  if (reports.empty()) return c;
  c.algorithm = reports.front()->algorithm;
  size_t episodes = reports.front()->episodes.size();
  for (const TrainReport* r : reports) episodes = std::min(episodes, r->episodes.size());
  auto fill = [&](std::vector<CurveRow>& rows, double EpisodeRecord::*field) {
    rows.resize(episodes);
    for (size_t e = 0; e < episodes; ++e) {
      CurveRow row;
      row.min = std::numeric_limits<double>::infinity();
      row.max = -std::numeric_limits<double>::infinity();
      double sum = 0.0;
      for (const TrainReport* r : reports) {
        const double v = r->episodes[e].*field;
        sum += v;
        row.min = std::min(row.min, v);
        row.max = std::max(row.max, v);
      }
      row.mean = sum / static_cast<double>(reports.size());
      rows[e] = row;
    }
  };
  fill(c.reward, &EpisodeRecord::reward);
  fill(c.cost, &EpisodeRecord::cost);
  fill(c.unbalance, &EpisodeRecord::unbalance);
  return c;
}

void write_curves_csv(const std::filesystem::path& path, const TrainingCurves& curves) {
  std::ofstream out = open_out(path);
  out << "episode,reward_mean,reward_min,reward_max,cost_mean,cost_min,cost_max,"
         "unbalance_mean,unbalance_min,unbalance_max\n";
  for (size_t e = 0; e < curves.reward.size(); ++e) {
    out << e;
    for (const auto* series : {&curves.reward, &curves.cost, &curves.unbalance}) {
      const CurveRow& r = (*series)[e];
      out << ',' << fmt10(r.mean) << ',' << fmt10(r.min) << ',' << fmt10(r.max);
    }
    out << '\n';
  }
}

TrainingExperiment run_training_experiment(const ExperimentSpec& spec) {
  const ExperimentData data = prepare_data(spec);
  TrainingExperiment exp;
  exp.keys = grid_keys(spec, {spec.system.sigma2});
  exp.runs = train_runs(data, spec, exp.keys);
  std::filesystem::create_directories(spec.out_dir);
  for (Algorithm a : spec.algorithms) {
    std::vector<const TrainReport*> reports;
    for (size_t i = 0; i < exp.keys.size(); ++i) {
      if (exp.keys[i].algorithm != a) continue;
      reports.push_back(&exp.runs[i].report);
      const std::string tag = to_string(a) + "_seed" + std::to_string(exp.keys[i].seed);
      write_train_report_csv((spec.out_dir / ("train_" + tag + ".csv")).string(),
                             exp.runs[i].report);
      exp.runs[i].policy.save((spec.out_dir / ("policy_" + tag + ".txt")).string());
    }
    TrainingCurves curves = aggregate_curves(reports);
    curves.sigma2 = spec.system.sigma2;
    write_curves_csv(spec.out_dir / ("curves_" + to_string(a) + ".csv"), curves);
    exp.curves.push_back(std::move(curves));
  }
  return exp;
}

std::vector<OracleDay> solve_oracle_days(const ExperimentData& data, const ExperimentSpec& spec) {
  std::vector<OracleDay> days(data.eval_days.size());
  const double soc = eval_soc(data.system);
  parallel_for(days.size(), spec.jobs, [&](size_t i) {
    const DaySlice slice = data.profile.day(data.eval_days[i]);
    days[i].day = data.eval_days[i];
    days[i].penalty = solve_day(slice, data.system, spec.disc, soc, Objective::kCostWithPenalty);
    days[i].hard = solve_day(slice, data.system, spec.disc, soc, Objective::kCostHardBalance);
  });
  return days;
}

namespace {

CumulativeSeries make_series(std::string name, const std::vector<int>& days,
                             const std::vector<double>& cost,
                             const std::vector<double>& unbalance,
                             const std::vector<bool>& feasible) {
  CumulativeSeries s;
  s.contender = std::move(name);
  s.days = days;
  s.cost = cost;
  s.unbalance = unbalance;
  s.feasible = feasible;
  double cc = 0.0, cu = 0.0;
  for (size_t i = 0; i < days.size(); ++i) {
    cc += cost[i];
    cu += unbalance[i];
    s.cum_cost.push_back(cc);
    s.cum_unbalance.push_back(cu);
  }
  return s;
}

// Deterministic rollouts of every (algorithm, seed) policy over the eval days.
std::vector<std::vector<std::vector<DayEvaluation>>> evaluate_all(
    const ExperimentData& data, const ExperimentSpec& spec, const TrainingExperiment& trained) {
  const std::vector<DaySlice> days = slices(data);
  std::vector<std::vector<std::vector<DayEvaluation>>> out(spec.algorithms.size());
  for (size_t a = 0; a < spec.algorithms.size(); ++a) {
    out[a].resize(spec.seeds.size());
    for (size_t s = 0; s < spec.seeds.size(); ++s) {
      const TrainResult& run = find_run(trained, spec.algorithms[a], spec.seeds[s]);
      out[a][s] = evaluate_policy(run.policy, days, eval_soc(data.system), data.system);
    }
  }
  return out;
}

}  // namespace

CumulativeResult run_cumulative_eval(const ExperimentSpec& spec,
                                     const TrainingExperiment* trained) {
  const ExperimentData data = prepare_data(spec);
  TrainingExperiment local;
  if (!trained) {
    local.keys = grid_keys(spec, {spec.system.sigma2});
    local.runs = train_runs(data, spec, local.keys);
    trained = &local;
  }
  CumulativeResult result;
  result.oracle = solve_oracle_days(data, spec);
  result.evaluations = evaluate_all(data, spec, *trained);

  const size_t nd = data.eval_days.size();
  for (size_t a = 0; a < spec.algorithms.size(); ++a) {
    std::vector<double> cost(nd, 0.0), unb(nd, 0.0);
    std::vector<bool> feasible(nd, true);
    for (const auto& per_seed : result.evaluations[a]) {
      for (size_t d = 0; d < nd; ++d) {
        cost[d] += per_seed[d].cost / static_cast<double>(spec.seeds.size());
        unb[d] += per_seed[d].unbalance / static_cast<double>(spec.seeds.size());
        feasible[d] = feasible[d] && per_seed[d].feasible;
      }
    }
    result.series.push_back(
        make_series(to_string(spec.algorithms[a]), data.eval_days, cost, unb, feasible));
  }
  for (const bool hard : {false, true}) {
    std::vector<double> cost, unb;
    std::vector<bool> feasible;
    for (const OracleDay& o : result.oracle) {
      const DPSolution& sol = hard ? o.hard : o.penalty;
      cost.push_back(sol.feasible ? sol.total_cost : std::numeric_limits<double>::infinity());
      unb.push_back(sol.feasible ? sol.total_unbalance : std::numeric_limits<double>::infinity());
      feasible.push_back(sol.feasible);
    }
    result.series.push_back(make_series(hard ? "ORACLE_HARD" : "ORACLE_PENALTY",
                                        data.eval_days, cost, unb, feasible));
  }

  std::ofstream out = open_out(spec.out_dir / "cumulative.csv");
  out << "contender,day,cost,unbalance,cum_cost,cum_unbalance,feasible\n";
  for (const CumulativeSeries& s : result.series) {
    for (size_t i = 0; i < s.days.size(); ++i) {
      out << s.contender << ',' << s.days[i] << ',' << fmt10(s.cost[i]) << ','
          << fmt10(s.unbalance[i]) << ',' << fmt10(s.cum_cost[i]) << ','
          << fmt10(s.cum_unbalance[i]) << ',' << (s.feasible[i] ? 1 : 0) << '\n';
    }
  }
  return result;
}

MetricsTable run_test_table(const ExperimentSpec& spec, const TrainingExperiment* trained) {
  const ExperimentData data = prepare_data(spec);
  TrainingExperiment local;
  if (!trained) {
    local.keys = grid_keys(spec, {spec.system.sigma2});
    local.runs = train_runs(data, spec, local.keys);
    trained = &local;
  }
  const std::vector<OracleDay> oracle = solve_oracle_days(data, spec);
  const auto evals = evaluate_all(data, spec, *trained);

  MetricsTable table;
  for (size_t d = 0; d < data.eval_days.size(); ++d) {
    for (size_t a = 0; a < spec.algorithms.size(); ++a) {
      std::vector<double> cost, unb;
      for (const auto& per_seed : evals[a]) {
        cost.push_back(per_seed[d].cost);
        unb.push_back(per_seed[d].unbalance);
      }
      MetricsRow row;
      row.day = data.eval_days[d];
      row.algorithm = spec.algorithms[a];
      row.cost = confidence_interval(cost);
      row.unbalance = confidence_interval(unb, true);
      row.oracle_cost = oracle[d].penalty.total_cost;
      row.oracle_unbalance = oracle[d].penalty.total_unbalance;
      table.rows.push_back(row);
    }
  }
  write_metrics_table(spec.out_dir / "table.csv", table);
  return table;
}

void write_metrics_table(const std::filesystem::path& path, const MetricsTable& table) {
  std::ofstream out = open_out(path);
  out << "day,algorithm,n,cost_mean,cost_lower,cost_upper,unbalance_mean,unbalance_lower,"
         "unbalance_upper,oracle_cost,oracle_unbalance\n";
  for (const MetricsRow& r : table.rows) {
    out << r.day << ',' << to_string(r.algorithm) << ',' << r.cost.n << ','
        << fmt6(r.cost.mean) << ',' << fmt6(r.cost.lower) << ',' << fmt6(r.cost.upper) << ','
        << fmt6(r.unbalance.mean) << ',' << fmt6(r.unbalance.lower) << ','
        << fmt6(r.unbalance.upper) << ',' << fmt6(r.oracle_cost) << ','
        << fmt6(r.oracle_unbalance) << '\n';
  }
}

MetricsTable read_metrics_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  MetricsTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw UsageError("malformed table row: " + line);
    MetricsRow r;
    r.day = std::stoi(f[0]);
    r.algorithm = parse_algorithm(f[1]);
    r.cost.n = r.unbalance.n = std::stoi(f[2]);
    r.cost.mean = std::stod(f[3]);
    r.cost.lower = std::stod(f[4]);
    r.cost.upper = std::stod(f[5]);
    r.unbalance.mean = std::stod(f[6]);
    r.unbalance.lower = std::stod(f[7]);
    r.unbalance.upper = std::stod(f[8]);
    r.oracle_cost = std::stod(f[9]);
    r.oracle_unbalance = std::stod(f[10]);
    table.rows.push_back(r);
  }
  return table;
}

SensitivityResult run_sensitivity(const ExperimentSpec& spec) {
  const ExperimentData data = prepare_data(spec);
  SensitivityResult result;
  result.keys = grid_keys(spec, spec.sigma2_values);
  result.runs = train_runs(data, spec, result.keys);
  for (Algorithm a : spec.algorithms) {
    for (double s2 : spec.sigma2_values) {
      std::vector<const TrainReport*> reports;
      for (size_t i = 0; i < result.keys.size(); ++i) {
        if (result.keys[i].algorithm == a && result.keys[i].sigma2 == s2) {
          reports.push_back(&result.runs[i].report);
        }
      }
      TrainingCurves curves = aggregate_curves(reports);
      curves.sigma2 = s2;
      write_curves_csv(
          spec.out_dir / ("sensitivity_" + to_string(a) + "_sigma2_" + sigma_tag(s2) + ".csv"),
          curves);
      result.curves.push_back(std::move(curves));
    }
  }
  return result;
}

void write_schedule_dump(const std::filesystem::path& path, const Schedule& schedule,
                         const DaySlice& day, const SystemConfig& sys) {
  std::ofstream out = open_out(path);
  out << "hour,soc";
  for (size_t i = 0; i < sys.num_dg(); ++i) out << ",dg" << i + 1 << "_kw";
  out << ",ess_kw,grid_kw,price,load_kw,pv_kw,unbalance_kw,cost\n";
  for (size_t t = 0; t < schedule.steps.size(); ++t) {
    const ScheduleStep& s = schedule.steps[t];
    out << t << ',' << fmt10(s.soc);
    for (double p : s.dg_power) out << ',' << fmt10(p);
    out << ',' << fmt10(s.ess_power) << ',' << fmt10(s.grid_power) << ','
        << fmt10(day.price[t]) << ',' << fmt10(day.load[t]) << ',' << fmt10(day.pv[t]) << ','
        << fmt10(s.unbalance) << ',' << fmt10(s.step_cost) << '\n';
  }
}

void dump_schedule(const ExperimentSpec& spec, const TrainingExperiment* trained) {
  const ExperimentData data = prepare_data(spec);
  if (data.eval_days.empty()) throw UsageError("no evaluation day selected");
  const DaySlice day = data.profile.day(data.eval_days.front());
  ExperimentSpec first_seed = spec;
  first_seed.seeds = {spec.seeds.front()};
  TrainingExperiment local;
  if (!trained) {
    local.keys = grid_keys(first_seed, {spec.system.sigma2});
    local.runs = train_runs(data, first_seed, local.keys);
    trained = &local;
  }
  for (Algorithm a : spec.algorithms) {
    const TrainResult& run = find_run(*trained, a, spec.seeds.front());
    const auto ev = evaluate_policy(run.policy, {day}, eval_soc(data.system), data.system);
    write_schedule_dump(spec.out_dir / ("schedule_" + to_string(a) + ".csv"),
                        ev.front().schedule, day, data.system);
  }
  const DPSolution sol = solve_day(day, data.system, spec.disc, eval_soc(data.system),
                                   Objective::kCostWithPenalty);
  write_schedule_dump(spec.out_dir / "schedule_ORACLE.csv", sol.schedule, day, data.system);
}

std::vector<OracleDay> run_oracle_only(const ExperimentSpec& spec) {
  const ExperimentData data = prepare_data(spec);
  const std::vector<OracleDay> days = solve_oracle_days(data, spec);
  std::ofstream out = open_out(spec.out_dir / "oracle_days.csv");
  out << "day,objective,feasible,cost,unbalance,objective_value,states_expanded,max_snap_error\n";
  for (const OracleDay& o : days) {
    for (const bool hard : {false, true}) {
      const DPSolution& sol = hard ? o.hard : o.penalty;
      const char* name = hard ? "hard_balance" : "cost_with_penalty";
      out << o.day << ',' << name << ',' << (sol.feasible ? 1 : 0) << ','
          << fmt10(sol.total_cost) << ',' << fmt10(sol.total_unbalance) << ','
          << fmt10(sol.objective) << ',' << sol.states_expanded << ','
          << fmt10(sol.max_snap_error) << '\n';
      if (sol.feasible) {
        write_schedule_csv(spec.out_dir / ("oracle_day" + std::to_string(o.day) + "_" + name +
                                           ".csv"),
                           sol.schedule, data.system);
      }
    }
  }
  return days;
}

double window_mean(const TrainReport& report, size_t begin, size_t end,
                   double EpisodeRecord::*field) {
  end = std::min(end, report.episodes.size());
  if (begin >= end) throw UsageError("empty episode window");
  double sum = 0.0;
  for (size_t i = begin; i < end; ++i) sum += report.episodes[i].*field;
  return sum / static_cast<double>(end - begin);
}

}  // namespace msched
