// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../tiny_instances.hpp"
#include "msched/bench.hpp"
#include "msched/env.hpp"
#include "msched/errors.hpp"
#include "msched/nn.hpp"
#include "msched/oracle.hpp"
#include "msched/stats.hpp"

namespace fs = std::filesystem;
using namespace msched;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& title, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, title.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void gradient_check() {
  const Stopwatch sw;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> width(1, 8);
  const nn::Activation acts[] = {nn::Activation::kReLU, nn::Activation::kTanh,
                                 nn::Activation::kIdentity};
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> sizes = {width(rng)};
    for (int l = 0; l < 1 + trial % 3; ++l) sizes.push_back(width(rng));
    nn::Mlp net(sizes, acts[trial % 3], acts[(trial / 3) % 3], rng);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(sizes.front(), 4), gy(sizes.back(), 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
    for (Eigen::Index i = 0; i < gy.size(); ++i) gy(i) = normal(rng);
    auto loss = [&] { return (net.forward(x).array() * gy.array()).sum(); };
    nn::Tape tape;
    net.forward(x, &tape);
    const nn::Gradients g = net.backward(tape, gy);
    for (size_t k = 0; k < net.num_params(); ++k) {
      const double saved = net.params()[k];
      net.params()[k] = saved + h;
      net.touch();
      const double up = loss();
      net.params()[k] = saved - h;
      net.touch();
      const double down = loss();
      net.params()[k] = saved;
      net.touch();
      const double fd = (up - down) / (2 * h);
      const double rel = std::abs(g.params[k] - fd) / std::max({std::abs(g.params[k]),
                                                                std::abs(fd), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  const double t = sw.seconds();
  report(1, worst < 1e-4 && t < 5.0, "backprop matches central differences on 20 networks",
         "max relative error " + fmt("%.3g", worst) + ", " + fmt("%.2f", t) + " s");
}

void oracle_exactness() {
  const Stopwatch sw;
  std::mt19937_64 rng(99);
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const auto inst = testing::random_tiny_instance(rng);
    const DPSolution dp = solve_day(inst.day, inst.cfg, inst.disc, inst.soc_init, inst.objective);
    const DPSolution bf =
        brute_force_day(inst.day, inst.cfg, inst.disc, inst.soc_init, inst.objective);
    if (dp.feasible != bf.feasible || (dp.feasible && dp.objective != bf.objective)) ++mismatches;
  }
  const double t = sw.seconds();
  report(2, mismatches == 0 && t < 60.0, "dynamic program equals brute force on 100 tiny instances",
         std::to_string(mismatches) + " mismatches, " + fmt("%.2f", t) + " s");
}

// Random raw actions (including out-of-range values) on random states.
void environment_fuzz(int steps, std::mt19937_64& rng, int& violations, double& worst_identity) {
  const Profile profile = synthesize_profiles(13, 60);
  for (const SocMode mode : {SocMode::kLiteral, SocMode::kPhysical}) {
    SystemConfig cfg = SystemConfig::reference();
    cfg.ess.soc_mode = mode;
    cfg.obs_scale = {profile.pv_max(), profile.load_max()};
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_int_distribution<int> pick_day(0, profile.days() - 1);
    std::uniform_real_distribution<double> soc(cfg.ess.e_min, cfg.ess.e_max);
    const double tol = 1e-9;
    int done = 0;
    while (done < steps / 2) {
      const DaySlice day = profile.day(pick_day(rng));
      EnvState st = reset(day, soc(rng), cfg);
      for (int t = 0; t < cfg.horizon && done < steps / 2; ++t, ++done) {
        RawAction raw;
        for (size_t g = 0; g < cfg.num_dg(); ++g) raw.dg.push_back(u(rng));
        raw.ess = u(rng);
        const StepOutcome out = step(st, raw, day, cfg);
        const double soc_next = out.next_state.soc;
        if (soc_next < cfg.ess.e_min - tol || soc_next > cfg.ess.e_max + tol) ++violations;
        if (std::abs(out.applied.ess_power) > cfg.ess.p_limit + tol) ++violations;
        if (std::abs(out.grid_power) > cfg.grid.p_exchange_max + tol) ++violations;
        if (out.unbalance < -tol) ++violations;
        for (size_t g = 0; g < cfg.num_dg(); ++g) {
          const DGUnit& unit = cfg.dg_units[g];
          const double p = out.applied.dg_power[g];
          const double prev = st.prev_dg_power[g];
          if (out.applied.dg_on[g]) {
            if (p < unit.p_min - tol || p > unit.p_max + tol) ++violations;
            if (prev > 0.0 && (p - prev > unit.ramp_up + tol || prev - p > unit.ramp_down + tol)) {
              ++violations;
            }
          } else if (p != 0.0) {
            ++violations;
          }
        }
        const double identity = out.reward + cfg.sigma1 * out.cost(cfg.delta_t) +
                                cfg.sigma2 * out.unbalance;
        worst_identity = std::max(worst_identity, std::abs(identity));
        st = out.next_state;
      }
    }
  }
}

void environment_checks() {
  Stopwatch sw;
  std::mt19937_64 rng(5);
  int violations = 0;
  double identity = 0.0;
  environment_fuzz(10000, rng, violations, identity);
  const double t = sw.seconds();
  report(3, violations == 0 && t < 5.0, "10,000 random actions respect every invariant",
         std::to_string(violations) + " violations, " + fmt("%.2f", t) + " s");
  std::mt19937_64 rng2(6);
  int unused = 0;
  identity = 0.0;
  environment_fuzz(1000, rng2, unused, identity);
  report(4, identity <= 1e-9, "reward + sigma1 dt cost + sigma2 unbalance vanishes on 1,000 steps",
         "max |residual| " + fmt("%.3g", identity));
}

ExperimentSpec base_spec(const fs::path& out, int jobs) {
  ExperimentSpec spec;
  spec.out_dir = out;
  spec.jobs = jobs;
  return spec;
}

double mean_daily_demand(const ExperimentData& data) {
  double total = 0.0;
  for (int d : data.split.train_days) total += data.profile.day(d).total_load();
  return total / static_cast<double>(data.split.train_days.size());
}

void learning_progress(const TrainingExperiment& trained, const ExperimentData& data) {
  const double limit = 0.05 * mean_daily_demand(data);
  bool ok = true;
  std::ostringstream detail;
  detail << "unbalance limit " << fmt("%.1f", limit) << " kW;";
  for (const Algorithm a : {Algorithm::kPPO, Algorithm::kSAC}) {
    int good = 0;
    double seconds = 0.0;
    for (size_t i = 0; i < trained.keys.size(); ++i) {
      if (trained.keys[i].algorithm != a) continue;
      const TrainReport& r = trained.runs[i].report;
      seconds += r.wall_seconds;
      const double early = window_mean(r, 0, 100, &EpisodeRecord::reward);
      const double late = window_mean(r, 900, 1000, &EpisodeRecord::reward);
      const double unb = window_mean(r, 900, 1000, &EpisodeRecord::unbalance);
      if (late > early && unb < limit) ++good;
    }
    ok = ok && good >= 4 && seconds <= 900.0;
    detail << ' ' << to_string(a) << ' ' << good << "/5 seeds in " << fmt("%.0f", seconds) << " s;";
  }
  report(5, ok, "PPO and SAC improve reward and keep unbalance below 5% of demand", detail.str());
}

void sigma_monotonicity(const fs::path& out, int jobs) {
  ExperimentSpec spec = base_spec(out, jobs);
  spec.algorithms = {Algorithm::kPPO};
  spec.seeds = {0, 1, 2};
  const ExperimentData data = prepare_data(spec);
  std::vector<RunKey> keys;
  for (const double s2 : {20.0, 100.0}) {
    for (uint64_t seed : spec.seeds) keys.push_back({Algorithm::kPPO, s2, seed});
  }
  const std::vector<TrainResult> runs = train_runs(data, spec, keys);
  double low = 0.0, high = 0.0;
  for (size_t i = 0; i < keys.size(); ++i) {
    const TrainReport& r = runs[i].report;
    const double unb = window_mean(r, r.episodes.size() - 100, r.episodes.size(),
                                   &EpisodeRecord::unbalance) / 3.0;
    (keys[i].sigma2 == 20.0 ? low : high) += unb;
  }
  report(6, high <= low, "PPO unbalance at sigma2=100 does not exceed sigma2=20",
         "terminal mean unbalance " + fmt("%.2f", high) + " kW vs " + fmt("%.2f", low) + " kW");
}

void optimality_gap(const ExperimentSpec& spec, const TrainingExperiment& trained) {
  const CumulativeResult res = run_cumulative_eval(spec, &trained);
  const ExperimentData data = prepare_data(spec);
  double oracle_total = 0.0;
  for (const OracleDay& o : res.oracle) oracle_total += o.penalty.total_cost;
  std::string best;
  double best_total = INFINITY;
  for (const CumulativeSeries& s : res.series) {
    if (s.contender.rfind("ORACLE", 0) == 0 || s.cum_cost.empty()) continue;
    if (s.cum_cost.back() < best_total) {
      best_total = s.cum_cost.back();
      best = s.contender;
    }
  }
  int beaten = 0, checked = 0;
  for (const auto& per_algo : res.evaluations) {
    for (const auto& per_seed : per_algo) {
      for (size_t d = 0; d < per_seed.size(); ++d) {
        const DaySlice day = data.profile.day(data.eval_days[d]);
        const LatticeScore score = score_on_lattice(per_seed[d].schedule, day, data.system, spec.disc);
        ++checked;
        if (res.oracle[d].penalty.objective > score.objective) ++beaten;
      }
    }
  }
  const double ratio = best_total / oracle_total;
  report(7, ratio <= 1.4 && beaten == 0,
         "best learned policy within 40% of the oracle cost, oracle never beaten on the lattice",
         best + " 10-day cost " + fmt("%.0f", best_total) + " vs oracle " +
             fmt("%.0f", oracle_total) + " (ratio " + fmt("%.3f", ratio) + "); oracle beaten in " +
             std::to_string(beaten) + " of " + std::to_string(checked) + " lattice rescorings");
}

void statistics() {
  const ConfidenceInterval ci = confidence_interval({1, 2, 3, 4, 5});
  const ConfidenceInterval one = confidence_interval({4.0});
  const ConfidenceInterval flat = confidence_interval({2, 2, 2});
  bool empty_throws = false;
  try {
    confidence_interval({});
  } catch (const UsageError&) {
    empty_throws = true;
  }
  const bool ok = std::abs(ci.lower - 1.04) <= 0.01 && std::abs(ci.upper - 4.96) <= 0.01 &&
                  one.lower == 4.0 && one.upper == 4.0 && flat.lower == 2.0 &&
                  flat.upper == 2.0 && empty_throws;
  report(8, ok, "Student-t confidence intervals",
         "{1..5} -> (" + fmt("%.4f", ci.lower) + ", " + fmt("%.4f", ci.upper) + ")");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(const fs::path& out, int jobs) {
  std::vector<fs::path> dirs = {out / "a", out / "b"};
  for (size_t i = 0; i < 2; ++i) {
    fs::remove_all(dirs[i]);
    ExperimentSpec spec = base_spec(dirs[i], i == 0 ? jobs : 1);
    spec.kind = ExperimentKind::kTestTable;
    spec.seeds = {0, 1};
    spec.algo.episodes = 60;
    run_test_table(spec);
  }
  int files = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(dirs[0])) {
    ++files;
    const fs::path other = dirs[1] / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) ++differing;
  }
  int count_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dirs[1])) ++count_b;
  report(9, differing == 0 && files == count_b && files > 0,
         "two table runs produce bit-identical files",
         std::to_string(files) + " files compared, " + std::to_string(differing) + " differ");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"msched acceptance suite"};
  fs::path out = "acceptance_out";
  int jobs = 1;
  app.add_option("--out", out, "Output directory");
  app.add_option("--jobs", jobs, "Worker threads for training")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  gradient_check();
  oracle_exactness();
  environment_checks();

  ExperimentSpec spec = base_spec(out / "reference", jobs);
  const ExperimentData data = prepare_data(spec);
  const TrainingExperiment trained = run_training_experiment(spec);
  learning_progress(trained, data);
  sigma_monotonicity(out / "sigma2", jobs);
  optimality_gap(spec, trained);
  statistics();
  determinism(out / "determinism", jobs);

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
