#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "msched/algos.hpp"
#include "msched/config.hpp"
#include "msched/data.hpp"
#include "msched/oracle.hpp"
#include "msched/stats.hpp"

namespace msched {

enum class ExperimentKind {
  kTrainCurves,
  kCumulative,
  kTestTable,
  kSensitivity,
  kScheduleDump,
  kOracleOnly,
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kTrainCurves;
  std::vector<Algorithm> algorithms = {Algorithm::kDDPG, Algorithm::kTD3, Algorithm::kSAC,
                                       Algorithm::kPPO};
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4};
  std::string data_source = "synth:7";  // CSV path or synth:SEED
  int synth_days = 365;
  std::vector<double> sigma2_values = {20.0, 50.0, 100.0};
  // Absolute day indices into the profile. Empty selects the first 10 test days.
  std::vector<int> days;
  std::filesystem::path out_dir = "out";
  int jobs = 1;

  SystemConfig system = SystemConfig::reference();
  AlgoConfig algo;  // algorithm and seed are overridden per run
  Discretization disc;

  void validate() const;
};

// Reads the system, `algo.*` and `oracle.*` keys of a config file into spec.
void apply_experiment_config(const KeyValueFile& file, ExperimentSpec& spec);

// "synth:SEED" generates `synth_days` days; anything else is a CSV path.
Profile load_data_source(const std::string& source, int synth_days);

// Profile, split and the evaluation days of a spec, with the observation scale
// of spec.system set from the profile.
struct ExperimentData {
  Profile profile;
  SplitSpec split;
  std::vector<int> eval_days;
  SystemConfig system;
};
ExperimentData prepare_data(const ExperimentSpec& spec);

// Runs fn(0..count-1) on `jobs` worker threads. Results must be written to
// per-index slots; the first exception thrown is rethrown after all workers stop.
void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn);

struct RunKey {
  Algorithm algorithm = Algorithm::kPPO;
  double sigma2 = 50.0;
  uint64_t seed = 0;
};

// Trains every key independently; the output order matches `keys`.
std::vector<TrainResult> train_runs(const ExperimentData& data, const ExperimentSpec& spec,
                                    const std::vector<RunKey>& keys);

struct CurveRow {
  double mean = 0.0, min = 0.0, max = 0.0;
};
struct TrainingCurves {
  Algorithm algorithm = Algorithm::kPPO;
  double sigma2 = 50.0;
  std::vector<CurveRow> reward, cost, unbalance;  // one row per episode
};
TrainingCurves aggregate_curves(const std::vector<const TrainReport*>& reports);
// CSV: episode,reward_mean,reward_min,reward_max,cost_mean,...,unbalance_max
void write_curves_csv(const std::filesystem::path& path, const TrainingCurves& curves);

struct TrainingExperiment {
  std::vector<RunKey> keys;
  std::vector<TrainResult> runs;
  std::vector<TrainingCurves> curves;  // one per algorithm, spec order
};
// Writes curves_<ALGO>.csv, train_<ALGO>_seed<S>.csv and policy_<ALGO>_seed<S>.txt.
TrainingExperiment run_training_experiment(const ExperimentSpec& spec);

struct OracleDay {
  int day = 0;
  DPSolution penalty;
  DPSolution hard;
};
std::vector<OracleDay> solve_oracle_days(const ExperimentData& data, const ExperimentSpec& spec);

struct CumulativeSeries {
  std::string contender;  // algorithm name, ORACLE_PENALTY or ORACLE_HARD
  std::vector<int> days;
  std::vector<double> cost;        // per day ($); seed mean for algorithms
  std::vector<double> unbalance;   // per day (kW)
  std::vector<double> cum_cost;
  std::vector<double> cum_unbalance;
  std::vector<bool> feasible;
};
struct CumulativeResult {
  std::vector<CumulativeSeries> series;
  std::vector<OracleDay> oracle;
  // [algorithm][seed][day] deterministic rollouts at soc = e_max / 2.
  std::vector<std::vector<std::vector<DayEvaluation>>> evaluations;
};
// Trains (or reuses `trained`, which must cover spec.algorithms x spec.seeds
// at the configured sigma2) and writes cumulative.csv.
CumulativeResult run_cumulative_eval(const ExperimentSpec& spec,
                                     const TrainingExperiment* trained = nullptr);

struct MetricsRow {
  int day = 0;
  Algorithm algorithm = Algorithm::kPPO;
  ConfidenceInterval cost;
  ConfidenceInterval unbalance;  // lower bound floored at 0
  double oracle_cost = 0.0;      // CostWithPenalty oracle
  double oracle_unbalance = 0.0;
};
struct MetricsTable {
  std::vector<MetricsRow> rows;  // day-major, algorithms in spec order
};
// Writes table.csv with 6 significant digits.
MetricsTable run_test_table(const ExperimentSpec& spec, const TrainingExperiment* trained = nullptr);
void write_metrics_table(const std::filesystem::path& path, const MetricsTable& table);
MetricsTable read_metrics_table(const std::filesystem::path& path);

struct SensitivityResult {
  std::vector<TrainingCurves> curves;  // algorithm-major, then sigma2
  std::vector<RunKey> keys;
  std::vector<TrainResult> runs;
};
// Writes sensitivity_<ALGO>_sigma2_<V>.csv per (algorithm, sigma2).
SensitivityResult run_sensitivity(const ExperimentSpec& spec);

// Writes schedule_<ALGO>.csv (first seed) and schedule_ORACLE.csv for the first
// evaluation day. Columns: hour,soc,dg1_kw..,ess_kw,grid_kw,price,load_kw,pv_kw,
// unbalance_kw,cost.
void dump_schedule(const ExperimentSpec& spec, const TrainingExperiment* trained = nullptr);
void write_schedule_dump(const std::filesystem::path& path, const Schedule& schedule,
                         const DaySlice& day, const SystemConfig& sys);

// Writes oracle_days.csv and oracle_day<D>_<objective>.csv; no training.
std::vector<OracleDay> run_oracle_only(const ExperimentSpec& spec);

// Mean of `field` over episodes [begin, end) of a report.
double window_mean(const TrainReport& report, size_t begin, size_t end,
                   double EpisodeRecord::*field);

}  // namespace msched
