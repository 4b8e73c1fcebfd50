#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "msched/config.hpp"
#include "msched/data.hpp"

namespace msched {

// Grid spacing of the scheduling lattice. The ESS/SOC defaults are chosen so
// that eta * ess_step * delta_t equals soc_step for the reference storage,
// which keeps Literal-mode SOC trajectories exactly on the lattice.
struct Discretization {
  double dg_step = 25.0;           // kW
  double ess_step = 100.0 / 9.0;   // kW
  double soc_step = 10.0;          // kWh
};

// Level sets of the lattice. DG level 0 is "off" (0 kW); levels 1.. run from
// p_min to p_max in dg_step increments, the last interval possibly short.
class Lattice {
 public:
  Lattice(const SystemConfig& cfg, const Discretization& disc);

  const std::vector<std::vector<double>>& dg_levels() const { return dg_levels_; }
  const std::vector<double>& ess_levels() const { return ess_levels_; }
  const std::vector<double>& soc_levels() const { return soc_levels_; }

  // Levels of `unit` admissible after level `from`. Off is always reachable and
  // every level is reachable from off; otherwise ramp limits apply.
  const std::vector<int>& successors(size_t unit, int from) const {
    return successors_[unit][static_cast<size_t>(from)];
  }

  size_t num_units() const { return dg_levels_.size(); }
  // Number of joint DG level tuples; tuples are indexed row-major with unit 0
  // most significant, so index order is lexicographic order.
  size_t dg_tuple_count() const { return tuple_count_; }
  std::vector<int> decode_tuple(size_t flat) const;
  size_t encode_tuple(const std::vector<int>& levels) const;

  int nearest_soc(double soc) const;
  // SOC after applying ESS level `ess_index` from SOC level `soc_index`, or -1
  // when the unsnapped result leaves [e_min, e_max].
  int next_soc(int soc_index, int ess_index) const { return next_soc_[idx(soc_index, ess_index)]; }
  double snap_error(int soc_index, int ess_index) const { return snap_[idx(soc_index, ess_index)]; }

 private:
  size_t idx(int soc, int ess) const {
    return static_cast<size_t>(soc) * ess_levels_.size() + static_cast<size_t>(ess);
  }

  std::vector<std::vector<double>> dg_levels_;
  std::vector<double> ess_levels_;
  std::vector<double> soc_levels_;
  std::vector<std::vector<std::vector<int>>> successors_;
  std::vector<size_t> radix_;
  size_t tuple_count_ = 1;
  std::vector<int> next_soc_;
  std::vector<double> snap_;
};

// Throws ConfigError when a step is non-positive or a ramp limit is not a
// whole number of dg_step.
Lattice build_lattice(const SystemConfig& cfg, const Discretization& disc);

enum class Objective {
  kCostWithPenalty,  // sum(cost * dt) + (sigma2 / sigma1) * sum(unbalance)
  kCostHardBalance,  // sum(cost * dt), any unbalance is infeasible
};

struct ScheduleStep {
  std::vector<bool> dg_on;
  std::vector<double> dg_power;  // kW
  double ess_power = 0.0;        // kW, positive = charging
  double grid_power = 0.0;       // kW, positive = import
  double unbalance = 0.0;        // kW
  double step_cost = 0.0;        // $, (dg + exchange) * delta_t
  double soc = 0.0;              // kWh after the step
};

struct Schedule {
  double soc_init = 0.0;
  std::vector<ScheduleStep> steps;
};

struct DPSolution {
  bool feasible = false;
  Schedule schedule;
  double total_cost = 0.0;       // $
  double total_unbalance = 0.0;  // kW summed over steps
  double objective = std::numeric_limits<double>::infinity();
  uint64_t states_expanded = 0;
  double max_snap_error = 0.0;   // kWh, worst SOC rounding along the schedule
};

DPSolution solve_day(const DaySlice& slice, const SystemConfig& cfg,
                     const Discretization& disc, double soc_init,
                     Objective objective = Objective::kCostWithPenalty);

// Exhaustive enumeration of every lattice action sequence; the reference
// against which solve_day is verified. Ties go to the lexicographically
// smallest action-index sequence. Throws GuardError above 1e7 sequences.
DPSolution brute_force_day(const DaySlice& slice, const SystemConfig& cfg,
                           const Discretization& disc, double soc_init,
                           Objective objective = Objective::kCostWithPenalty);

inline constexpr uint64_t kBruteForceLimit = 10'000'000;

struct ScheduleEvaluation {
  double total_cost = 0.0;
  double total_unbalance = 0.0;
  bool feasible = true;
};

// Re-scores any schedule from first principles (no lattice, no snapping).
ScheduleEvaluation evaluate_schedule(const Schedule& schedule, const DaySlice& slice,
                                     const SystemConfig& cfg);

// total_cost + (sigma2 / sigma1) * total_unbalance, or total_cost (infinite if
// unbalanced) under kCostHardBalance.
double objective_value(double total_cost, double total_unbalance,
                       const SystemConfig& cfg, Objective objective);

struct LatticeScore {
  double objective = 0.0;
  Schedule snapped;
};

// Moves a (typically continuous) schedule onto the nearest admissible lattice
// actions and scores it with the exact arithmetic of solve_day, so that
// solve_day's optimum is directly comparable.
LatticeScore score_on_lattice(const Schedule& schedule, const DaySlice& slice,
                              const SystemConfig& cfg, const Discretization& disc,
                              Objective objective = Objective::kCostWithPenalty);

// CSV: hour,dg1_kw..dgN_kw,ess_kw,grid_kw,unbalance_kw,cost
void write_schedule_csv(const std::filesystem::path& path, const Schedule& schedule,
                        const SystemConfig& cfg);

}  // namespace msched
