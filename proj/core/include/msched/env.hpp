#pragma once

#include <vector>

#include "msched/config.hpp"
#include "msched/data.hpp"

namespace msched {

// Markov state of the scheduling day: exogenous inputs at step t, the DG
// powers applied at t-1 (0 = off) and the stored energy.
struct EnvState {
  int t = 0;
  double pv = 0.0;
  double load = 0.0;
  std::vector<double> prev_dg_power;
  double soc = 0.0;

  bool operator==(const EnvState&) const = default;
};

// Agent output before projection: one entry per DG plus the ESS, each in [-1, 1].
struct RawAction {
  std::vector<double> dg;
  double ess = 0.0;
};

// Physically admissible set-points. ess_power > 0 charges the storage.
struct AppliedAction {
  std::vector<double> dg_power;
  std::vector<bool> dg_on;
  double ess_power = 0.0;

  bool operator==(const AppliedAction&) const = default;
};

struct StepOutcome {
  EnvState next_state;
  AppliedAction applied;
  double reward = 0.0;
  double dg_cost = 0.0;        // $/h summed over units
  double exchange_cost = 0.0;  // $/h, negative when exporting
  double grid_power = 0.0;     // kW, positive = import
  double residual = 0.0;       // kW demand left after DG, PV and storage
  double unbalance = 0.0;      // kW not covered by the grid link
  bool done = false;

  // Operational cost of the step in $, i.e. (dg + exchange) * delta_t.
  double cost(double delta_t) const { return (dg_cost + exchange_cost) * delta_t; }

  bool operator==(const StepOutcome&) const = default;
};

struct GridExchange {
  double grid_power = 0.0;
  double unbalance = 0.0;
};

// Quadratic fuel cost of a committed unit; zero when off. Throws
// ConstraintViolation when p is outside the admissible range for `on`.
double dg_cost(const DGUnit& unit, double p, bool on);

double exchange_cost(double price, double grid_power, double sell_coefficient);

// Unclipped SOC update for one step.
double soc_transition(const ESSUnit& ess, double soc, double ess_power, double delta_t);

// Maps a raw action onto the hard-feasible set: commitment threshold,
// capacity, ramp (between two committed steps) and SOC bounds.
AppliedAction project_action(const RawAction& raw, const EnvState& state,
                             const SystemConfig& cfg);

// residual = load + ess_power - sum(dg) - pv. The grid absorbs what it can.
GridExchange grid_exchange(double residual, const GridLink& grid);

StepOutcome step(const EnvState& state, const RawAction& raw, const DaySlice& slice,
                 const SystemConfig& cfg);

// Evaluates an already-feasible action. step() is project_action + apply_action.
StepOutcome apply_action(const EnvState& state, const AppliedAction& action,
                         const DaySlice& slice, const SystemConfig& cfg);

EnvState reset(const DaySlice& slice, double soc_init, const SystemConfig& cfg);

// [pv, load, prev_dg_power..., soc] scaled to roughly [0, 1], plus t/horizon
// when include_time_feature is set.
std::vector<double> observe(const EnvState& state, const DaySlice& slice,
                            const SystemConfig& cfg);

// Convenience wrapper owning the current state and day slice.
class Environment {
 public:
  explicit Environment(SystemConfig cfg);

  const SystemConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }
  const DaySlice& slice() const { return slice_; }

  std::vector<double> reset(DaySlice slice, double soc_init);
  StepOutcome step(const RawAction& raw);
  std::vector<double> observation() const;
  bool done() const { return state_.t >= cfg_.horizon; }

 private:
  SystemConfig cfg_;
  DaySlice slice_;
  EnvState state_;
};

}  // namespace msched
