#include "msched/env.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msched/errors.hpp"

namespace msched {
namespace {

double clamp_unit(double x) {
  if (!std::isfinite(x)) return -1.0;
  return std::clamp(x, -1.0, 1.0);
}

// Charge/discharge power window that keeps the next SOC inside [e_min, e_max].
std::pair<double, double> ess_window(const ESSUnit& ess, double soc, double delta_t) {
  const double eta = ess.efficiency;
  const double hi = (ess.e_max - soc) / (eta * delta_t);
  const double lo = ess.soc_mode == SocMode::kLiteral ? (ess.e_min - soc) / (eta * delta_t)
                                                      : (ess.e_min - soc) * eta / delta_t;
  return {std::max(-ess.p_limit, lo), std::min(ess.p_limit, hi)};
}

}  // namespace

double dg_cost(const DGUnit& unit, double p, bool on) {
  if (!on) {
    if (p != 0.0) {
      throw ConstraintViolation("uncommitted DG unit must produce 0 kW, got " +
                                std::to_string(p));
    }
    return 0.0;
  }
  if (p < unit.p_min || p > unit.p_max) {
    throw ConstraintViolation("DG power " + std::to_string(p) + " kW outside [" +
                              std::to_string(unit.p_min) + ", " +
                              std::to_string(unit.p_max) + "]");
  }
  return unit.a * p * p + unit.b * p + unit.c;
}

double exchange_cost(double price, double grid_power, double sell_coefficient) {
  if (grid_power > 0.0) return price * grid_power;
  if (grid_power < 0.0) return sell_coefficient * price * grid_power;
  return 0.0;
}

double soc_transition(const ESSUnit& ess, double soc, double ess_power, double delta_t) {
  if (ess.soc_mode == SocMode::kPhysical && ess_power < 0.0) {
    return soc + ess_power * delta_t / ess.efficiency;
  }
  return soc + ess.efficiency * ess_power * delta_t;
}

AppliedAction project_action(const RawAction& raw, const EnvState& state,
                             const SystemConfig& cfg) {
  const size_t n = cfg.num_dg();
  if (raw.dg.size() != n || state.prev_dg_power.size() != n) {
    throw UsageError("action/state DG dimension does not match configuration");
  }
  AppliedAction out;
  out.dg_power.assign(n, 0.0);
  out.dg_on.assign(n, false);

  for (size_t i = 0; i < n; ++i) {
    const DGUnit& unit = cfg.dg_units[i];
    const double x = clamp_unit(raw.dg[i]);
    if (x < cfg.commit_threshold) continue;
    // The committed part of the action range [threshold, 1] covers [p_min, p_max].
    const double frac = (x - cfg.commit_threshold) / (1.0 - cfg.commit_threshold);
    double p = std::clamp(unit.p_min + frac * (unit.p_max - unit.p_min), unit.p_min, unit.p_max);
    const double prev = state.prev_dg_power[i];
    if (prev > 0.0) {
      const double lo = std::max(unit.p_min, prev - unit.ramp_down);
      const double hi = std::min(unit.p_max, prev + unit.ramp_up);
      p = std::clamp(p, lo, hi);
    }
    out.dg_power[i] = p;
    out.dg_on[i] = true;
  }

  const ESSUnit& ess = cfg.ess;
  const auto [lo, hi] = ess_window(ess, state.soc, cfg.delta_t);
  double e = std::clamp(clamp_unit(raw.ess) * ess.p_limit, std::min(lo, 0.0),
                        std::max(hi, 0.0));
  // Rounding in the window computation can leave the SOC an ulp outside its
  // bounds; step the power back until the update is exactly admissible.
  while (e > 0.0 && soc_transition(ess, state.soc, e, cfg.delta_t) > ess.e_max) {
    e = std::nextafter(e, 0.0);
  }
  while (e < 0.0 && soc_transition(ess, state.soc, e, cfg.delta_t) < ess.e_min) {
    e = std::nextafter(e, 0.0);
  }
  out.ess_power = e;
  return out;
}

GridExchange grid_exchange(double residual, const GridLink& grid) {
  const double g = std::clamp(residual, -grid.p_exchange_max, grid.p_exchange_max);
  return {g, std::abs(residual - g)};
}

StepOutcome apply_action(const EnvState& state, const AppliedAction& action,
                         const DaySlice& slice, const SystemConfig& cfg) {
  if (state.t < 0 || state.t >= cfg.horizon) {
    throw UsageError("step called on a finished episode (t = " + std::to_string(state.t) +
                     ")");
  }
  const size_t n = cfg.num_dg();
  StepOutcome out;
  out.applied = action;

  double dg_total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out.dg_cost += dg_cost(cfg.dg_units[i], action.dg_power[i], action.dg_on[i]);
    dg_total += action.dg_power[i];
  }
  const auto t = static_cast<size_t>(state.t);
  out.residual = slice.load[t] + action.ess_power - dg_total - slice.pv[t];
  const GridExchange ex = grid_exchange(out.residual, cfg.grid);
  out.grid_power = ex.grid_power;
  out.unbalance = ex.unbalance;
  out.exchange_cost = exchange_cost(slice.price[t], out.grid_power, cfg.grid.sell_coefficient);
  out.reward = -cfg.sigma1 * (out.dg_cost + out.exchange_cost) * cfg.delta_t -
               cfg.sigma2 * out.unbalance;

  EnvState& next = out.next_state;
  next.t = state.t + 1;
  const auto tn = static_cast<size_t>(next.t);
  if (next.t < cfg.horizon && tn < slice.size()) {
    next.pv = slice.pv[tn];
    next.load = slice.load[tn];
  }
  next.prev_dg_power = action.dg_power;
  next.soc = std::clamp(soc_transition(cfg.ess, state.soc, action.ess_power, cfg.delta_t),
                        cfg.ess.e_min, cfg.ess.e_max);
  out.done = next.t == cfg.horizon;
  return out;
}

StepOutcome step(const EnvState& state, const RawAction& raw, const DaySlice& slice,
                 const SystemConfig& cfg) {
  if (state.t < 0 || state.t >= cfg.horizon) {
    throw UsageError("step called on a finished episode (t = " + std::to_string(state.t) +
                     ")");
  }
  return apply_action(state, project_action(raw, state, cfg), slice, cfg);
}

EnvState reset(const DaySlice& slice, double soc_init, const SystemConfig& cfg) {
  if (soc_init < cfg.ess.e_min || soc_init > cfg.ess.e_max) {
    throw ConstraintViolation("initial SOC " + std::to_string(soc_init) + " outside [" +
                              std::to_string(cfg.ess.e_min) + ", " +
                              std::to_string(cfg.ess.e_max) + "]");
  }
  if (slice.size() < static_cast<size_t>(cfg.horizon) || slice.pv.size() != slice.size() ||
      slice.price.size() != slice.size()) {
    throw UsageError("day slice shorter than the configured horizon");
  }
  EnvState s;
  s.t = 0;
  s.pv = slice.pv[0];
  s.load = slice.load[0];
  s.prev_dg_power.assign(cfg.num_dg(), 0.0);
  s.soc = soc_init;
  return s;
}

std::vector<double> observe(const EnvState& state, const DaySlice& /*slice*/,
                            const SystemConfig& cfg) {
  std::vector<double> f;
  f.reserve(cfg.observation_dim());
  f.push_back(state.pv / cfg.obs_scale.pv_max);
  f.push_back(state.load / cfg.obs_scale.load_max);
  for (size_t i = 0; i < cfg.num_dg(); ++i) {
    f.push_back(state.prev_dg_power[i] / cfg.dg_units[i].p_max);
  }
  f.push_back((state.soc - cfg.ess.e_min) / (cfg.ess.e_max - cfg.ess.e_min));
  if (cfg.include_time_feature) {
    f.push_back(static_cast<double>(state.t) / cfg.horizon);
  }
  return f;
}

Environment::Environment(SystemConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::vector<double> Environment::reset(DaySlice slice, double soc_init) {
  state_ = msched::reset(slice, soc_init, cfg_);
  slice_ = std::move(slice);
  return observation();
}

StepOutcome Environment::step(const RawAction& raw) {
  StepOutcome out = msched::step(state_, raw, slice_, cfg_);
  state_ = out.next_state;
  return out;
}

std::vector<double> Environment::observation() const {
  return observe(state_, slice_, cfg_);
}

}  // namespace msched
