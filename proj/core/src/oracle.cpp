#include "msched/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>

#include "msched/env.hpp"
#include "msched/errors.hpp"

namespace msched {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// lo, lo + step, ..., with hi always the last level (final interval may be short).
std::vector<double> arithmetic_levels(double lo, double hi, double step) {
  const double tol = 1e-9 * std::max(1.0, std::abs(hi));
  std::vector<double> levels{lo};
  for (int k = 1;; ++k) {
    const double x = lo + k * step;
    if (x >= hi - tol) break;
    levels.push_back(x);
  }
  if (hi - lo > tol) levels.push_back(hi);
  return levels;
}

bool is_whole_multiple(double value, double step) {
  const double q = value / step;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, q);
}

bool ramp_ok(const DGUnit& unit, double from, double to) {
  constexpr double kTol = 1e-9;
  return to - from <= unit.ramp_up + kTol && from - to <= unit.ramp_down + kTol;
}

struct StepValue {
  double dg_cost = 0.0;
  double exchange = 0.0;
  double grid = 0.0;
  double unbalance = 0.0;
  double cost = 0.0;
  double objective = 0.0;
};

// Single source of truth for lattice step scoring; solve_day, brute_force_day
// and score_on_lattice all go through here so their sums agree bit-for-bit.
StepValue lattice_step(const Lattice& lattice, const DaySlice& slice, const SystemConfig& cfg,
                       Objective objective, size_t t, std::span<const int> levels,
                       int ess_index) {
  StepValue v;
  double dg_total = 0.0;
  for (size_t i = 0; i < levels.size(); ++i) {
    const double p = lattice.dg_levels()[i][static_cast<size_t>(levels[i])];
    v.dg_cost += dg_cost(cfg.dg_units[i], p, levels[i] != 0);
    dg_total += p;
  }
  const double e = lattice.ess_levels()[static_cast<size_t>(ess_index)];
  const double residual = slice.load[t] + e - dg_total - slice.pv[t];
  const GridExchange ex = grid_exchange(residual, cfg.grid);
  v.grid = ex.grid_power;
  v.unbalance = ex.unbalance;
  v.exchange = exchange_cost(slice.price[t], v.grid, cfg.grid.sell_coefficient);
  v.cost = (v.dg_cost + v.exchange) * cfg.delta_t;
  if (objective == Objective::kCostWithPenalty) {
    v.objective = v.cost + (cfg.sigma2 / cfg.sigma1) * v.unbalance;
  } else {
    v.objective = v.unbalance > 0.0 ? kInf : v.cost;
  }
  return v;
}

struct LatticeAction {
  size_t tuple = 0;
  int ess = 0;
};

void check_inputs(const DaySlice& slice, const SystemConfig& cfg, double soc_init) {
  cfg.validate();
  if (slice.size() < static_cast<size_t>(cfg.horizon) || slice.pv.size() != slice.size() ||
      slice.price.size() != slice.size()) {
    throw UsageError("day slice shorter than the configured horizon");
  }
  if (soc_init < cfg.ess.e_min || soc_init > cfg.ess.e_max) {
    throw ConstraintViolation("initial SOC outside storage bounds");
  }
}

// Replays a lattice action sequence from (soc_index, all-off) into a Schedule.
DPSolution materialize(const Lattice& lattice, const DaySlice& slice, const SystemConfig& cfg,
                       Objective objective, int soc_index, double soc_init,
                       const std::vector<LatticeAction>& actions) {
  DPSolution sol;
  sol.feasible = true;
  sol.schedule.soc_init = lattice.soc_levels()[static_cast<size_t>(soc_index)];
  sol.max_snap_error = std::abs(soc_init - sol.schedule.soc_init);
  std::vector<double> objs;
  for (size_t t = 0; t < actions.size(); ++t) {
    const auto levels = lattice.decode_tuple(actions[t].tuple);
    const StepValue v = lattice_step(lattice, slice, cfg, objective, t, levels, actions[t].ess);
    ScheduleStep st;
    for (size_t i = 0; i < levels.size(); ++i) {
      st.dg_on.push_back(levels[i] != 0);
      st.dg_power.push_back(lattice.dg_levels()[i][static_cast<size_t>(levels[i])]);
    }
    st.ess_power = lattice.ess_levels()[static_cast<size_t>(actions[t].ess)];
    st.grid_power = v.grid;
    st.unbalance = v.unbalance;
    st.step_cost = v.cost;
    sol.max_snap_error = std::max(sol.max_snap_error, lattice.snap_error(soc_index, actions[t].ess));
    soc_index = lattice.next_soc(soc_index, actions[t].ess);
    st.soc = lattice.soc_levels()[static_cast<size_t>(soc_index)];
    sol.schedule.steps.push_back(std::move(st));
    sol.total_cost += v.cost;
    sol.total_unbalance += v.unbalance;
    objs.push_back(v.objective);
  }
  double acc = 0.0;
  for (auto it = objs.rbegin(); it != objs.rend(); ++it) acc = *it + acc;
  sol.objective = acc;
  return sol;
}

struct Candidate {
  double value = kInf;
  uint32_t arg = 0;
};

inline bool better(const Candidate& a, const Candidate& b) {
  return a.value < b.value || (a.value == b.value && a.arg < b.arg);
}

}  // namespace

Lattice::Lattice(const SystemConfig& cfg, const Discretization& disc) {
  if (!(disc.dg_step > 0.0) || !(disc.ess_step > 0.0) || !(disc.soc_step > 0.0)) {
    throw ConfigError("discretization steps must be positive");
  }
  for (const DGUnit& unit : cfg.dg_units) {
    if (!is_whole_multiple(unit.ramp_up, disc.dg_step) ||
        !is_whole_multiple(unit.ramp_down, disc.dg_step)) {
      throw ConfigError("ramp limits must be whole multiples of dg_step");
    }
    std::vector<double> levels{0.0};
    const auto on = arithmetic_levels(unit.p_min, unit.p_max, disc.dg_step);
    levels.insert(levels.end(), on.begin(), on.end());
    dg_levels_.push_back(std::move(levels));
  }

  const auto positive = arithmetic_levels(0.0, cfg.ess.p_limit, disc.ess_step);
  for (auto it = positive.rbegin(); it != positive.rend(); ++it) {
    if (*it > 0.0) ess_levels_.push_back(-*it);
  }
  ess_levels_.insert(ess_levels_.end(), positive.begin(), positive.end());
  soc_levels_ = arithmetic_levels(cfg.ess.e_min, cfg.ess.e_max, disc.soc_step);
  if (ess_levels_.size() > 255) throw ConfigError("ess_step too fine: more than 255 ESS levels");

  successors_.resize(dg_levels_.size());
  for (size_t i = 0; i < dg_levels_.size(); ++i) {
    const auto& levels = dg_levels_[i];
    for (size_t from = 0; from < levels.size(); ++from) {
      std::vector<int> next{0};
      for (size_t to = 1; to < levels.size(); ++to) {
        if (from == 0 || ramp_ok(cfg.dg_units[i], levels[from], levels[to])) {
          next.push_back(static_cast<int>(to));
        }
      }
      successors_[i].push_back(std::move(next));
    }
  }

  radix_.assign(dg_levels_.size(), 1);
  tuple_count_ = 1;
  for (size_t i = dg_levels_.size(); i-- > 0;) {
    radix_[i] = tuple_count_;
    tuple_count_ *= dg_levels_[i].size();
  }

  const double tol = 1e-9 * std::max(1.0, cfg.ess.e_max);
  next_soc_.assign(soc_levels_.size() * ess_levels_.size(), -1);
  snap_.assign(next_soc_.size(), 0.0);
  for (size_t s = 0; s < soc_levels_.size(); ++s) {
    for (size_t e = 0; e < ess_levels_.size(); ++e) {
      const double raw = soc_transition(cfg.ess, soc_levels_[s], ess_levels_[e], cfg.delta_t);
      if (raw < cfg.ess.e_min - tol || raw > cfg.ess.e_max + tol) continue;
      const int n = nearest_soc(raw);
      next_soc_[idx(static_cast<int>(s), static_cast<int>(e))] = n;
      snap_[idx(static_cast<int>(s), static_cast<int>(e))] =
          std::abs(raw - soc_levels_[static_cast<size_t>(n)]);
    }
  }
}

std::vector<int> Lattice::decode_tuple(size_t flat) const {
  std::vector<int> levels(dg_levels_.size());
  for (size_t i = 0; i < levels.size(); ++i) {
    levels[i] = static_cast<int>((flat / radix_[i]) % dg_levels_[i].size());
  }
  return levels;
}

size_t Lattice::encode_tuple(const std::vector<int>& levels) const {
  size_t flat = 0;
  for (size_t i = 0; i < levels.size(); ++i) flat += radix_[i] * static_cast<size_t>(levels[i]);
  return flat;
}

int Lattice::nearest_soc(double soc) const {
  const auto it = std::lower_bound(soc_levels_.begin(), soc_levels_.end(), soc);
  if (it == soc_levels_.begin()) return 0;
  if (it == soc_levels_.end()) return static_cast<int>(soc_levels_.size()) - 1;
  const auto hi = static_cast<int>(it - soc_levels_.begin());
  return (soc - *(it - 1) <= *it - soc) ? hi - 1 : hi;
}

Lattice build_lattice(const SystemConfig& cfg, const Discretization& disc) {
  return Lattice(cfg, disc);
}

double objective_value(double total_cost, double total_unbalance, const SystemConfig& cfg,
                       Objective objective) {
  if (objective == Objective::kCostWithPenalty) {
    return total_cost + (cfg.sigma2 / cfg.sigma1) * total_unbalance;
  }
  return total_unbalance > 0.0 ? kInf : total_cost;
}

DPSolution solve_day(const DaySlice& slice, const SystemConfig& cfg, const Discretization& disc,
                     double soc_init, Objective objective) {
  check_inputs(slice, cfg, soc_init);
  const Lattice lattice(cfg, disc);
  const auto horizon = static_cast<size_t>(cfg.horizon);
  const size_t n_tuple = lattice.dg_tuple_count();
  const size_t n_soc = lattice.soc_levels().size();
  const size_t n_ess = lattice.ess_levels().size();
  const size_t n_units = lattice.num_units();

  // value[soc * n_tuple + tuple] for the stage being built and the one after.
  std::vector<double> next_value(n_soc * n_tuple, 0.0);
  std::vector<double> value(n_soc * n_tuple, kInf);
  // Argmin action per (t, soc, previous DG tuple).
  std::vector<uint32_t> policy_tuple(horizon * n_soc * n_tuple, 0);
  std::vector<uint8_t> policy_ess(horizon * n_soc * n_tuple, 0);

  std::vector<double> step_obj(n_ess * n_tuple);
  std::vector<Candidate> buf_a(n_tuple), buf_b(n_tuple);
  std::vector<uint8_t> best_ess(n_tuple);
  std::vector<std::vector<int>> tuples(n_tuple);
  for (size_t g = 0; g < n_tuple; ++g) tuples[g] = lattice.decode_tuple(g);

  for (size_t t = horizon; t-- > 0;) {
    for (size_t e = 0; e < n_ess; ++e) {
      for (size_t g = 0; g < n_tuple; ++g) {
        step_obj[e * n_tuple + g] =
            lattice_step(lattice, slice, cfg, objective, t, tuples[g], static_cast<int>(e))
                .objective;
      }
    }

    for (size_t s = 0; s < n_soc; ++s) {
      // Best storage action for every target DG tuple (ties -> lower ESS index).
      for (size_t g = 0; g < n_tuple; ++g) {
        buf_a[g] = Candidate{kInf, static_cast<uint32_t>(g)};
        best_ess[g] = 0;
      }
      for (size_t e = 0; e < n_ess; ++e) {
        const int ns = lattice.next_soc(static_cast<int>(s), static_cast<int>(e));
        if (ns < 0) continue;
        const double* future = &next_value[static_cast<size_t>(ns) * n_tuple];
        const double* obj = &step_obj[e * n_tuple];
        for (size_t g = 0; g < n_tuple; ++g) {
          const double v = obj[g] + future[g];
          if (v < buf_a[g].value) {
            buf_a[g].value = v;
            best_ess[g] = static_cast<uint8_t>(e);
          }
        }
      }

      // Min over the ramp-reachable box, one unit axis at a time. After the
      // pass for axis j that coordinate indexes the previous level instead of
      // the target level. Ties resolve to the smaller target tuple index,
      // i.e. the lexicographically smallest DG action.
      size_t stride = 1;
      for (size_t j = n_units; j-- > 0;) {
        const size_t n_j = lattice.dg_levels()[j].size();
        const size_t block = n_j * stride;
        for (size_t outer = 0; outer < n_tuple; outer += block) {
          for (size_t from = 0; from < n_j; ++from) {
            const auto& succ = lattice.successors(j, static_cast<int>(from));
            for (size_t inner = 0; inner < stride; ++inner) {
              Candidate best;
              best.arg = std::numeric_limits<uint32_t>::max();
              for (int to : succ) {
                const Candidate& c = buf_a[outer + static_cast<size_t>(to) * stride + inner];
                if (better(c, best)) best = c;
              }
              buf_b[outer + from * stride + inner] = best;
            }
          }
        }
        std::swap(buf_a, buf_b);
        stride = block;
      }

      const size_t base = (t * n_soc + s) * n_tuple;
      for (size_t prev = 0; prev < n_tuple; ++prev) {
        value[s * n_tuple + prev] = buf_a[prev].value;
        policy_tuple[base + prev] = buf_a[prev].arg;
        policy_ess[base + prev] = best_ess[buf_a[prev].arg];
      }
    }
    std::swap(value, next_value);
  }

  const int soc0 = lattice.nearest_soc(soc_init);
  const double optimum = next_value[static_cast<size_t>(soc0) * n_tuple];
  DPSolution sol;
  sol.states_expanded = static_cast<uint64_t>(horizon) * n_soc * n_tuple;
  if (!std::isfinite(optimum)) {
    sol.feasible = false;
    return sol;
  }

  std::vector<LatticeAction> actions;
  int s = soc0;
  size_t prev = 0;
  for (size_t t = 0; t < horizon; ++t) {
    const size_t key = (t * n_soc + static_cast<size_t>(s)) * n_tuple + prev;
    LatticeAction a{policy_tuple[key], policy_ess[key]};
    actions.push_back(a);
    s = lattice.next_soc(s, a.ess);
    prev = a.tuple;
  }
  DPSolution out = materialize(lattice, slice, cfg, objective, soc0, soc_init, actions);
  out.states_expanded = sol.states_expanded;
  return out;
}

DPSolution brute_force_day(const DaySlice& slice, const SystemConfig& cfg,
                           const Discretization& disc, double soc_init, Objective objective) {
  check_inputs(slice, cfg, soc_init);
  const Lattice lattice(cfg, disc);
  const auto horizon = static_cast<size_t>(cfg.horizon);
  const size_t n_tuple = lattice.dg_tuple_count();
  const size_t n_ess = lattice.ess_levels().size();
  const uint64_t per_step = static_cast<uint64_t>(n_tuple) * n_ess;

  uint64_t total = 1;
  for (size_t t = 0; t < horizon; ++t) {
    if (total > kBruteForceLimit / per_step + 1) {
      total = kBruteForceLimit + 1;
      break;
    }
    total *= per_step;
  }
  if (total > kBruteForceLimit) {
    throw GuardError("brute-force enumeration exceeds 1e7 schedules");
  }

  const int soc0 = lattice.nearest_soc(soc_init);
  std::vector<std::vector<int>> tuples(n_tuple);
  for (size_t g = 0; g < n_tuple; ++g) tuples[g] = lattice.decode_tuple(g);

  // Odometer over action-index sequences, step 0 most significant, so the
  // first strictly-better sequence found is also the lexicographically smallest.
  std::vector<uint64_t> digits(horizon, 0);
  std::vector<double> objs(horizon);
  double best = kInf;
  std::vector<uint64_t> best_digits;
  for (uint64_t count = 0; count < total; ++count) {
    bool feasible = true;
    int s = soc0;
    std::vector<int> prev(lattice.num_units(), 0);
    for (size_t t = 0; t < horizon && feasible; ++t) {
      const size_t tuple = digits[t] / n_ess;
      const int e = static_cast<int>(digits[t] % n_ess);
      const auto& levels = tuples[tuple];
      for (size_t i = 0; i < levels.size() && feasible; ++i) {
        const auto& succ = lattice.successors(i, prev[i]);
        feasible = std::find(succ.begin(), succ.end(), levels[i]) != succ.end();
      }
      const int ns = lattice.next_soc(s, e);
      if (!feasible || ns < 0) {
        feasible = false;
        break;
      }
      objs[t] = lattice_step(lattice, slice, cfg, objective, t, levels, e).objective;
      s = ns;
      prev = levels;
    }
    if (feasible) {
      double acc = 0.0;
      for (size_t t = horizon; t-- > 0;) acc = objs[t] + acc;
      if (acc < best) {
        best = acc;
        best_digits = digits;
      }
    }
    for (size_t t = horizon; t-- > 0;) {
      if (++digits[t] < per_step) break;
      digits[t] = 0;
    }
  }

  if (best_digits.empty()) {
    DPSolution none;
    none.feasible = false;
    return none;
  }
  std::vector<LatticeAction> actions;
  for (uint64_t d : best_digits) {
    actions.push_back({static_cast<size_t>(d / n_ess), static_cast<int>(d % n_ess)});
  }
  return materialize(lattice, slice, cfg, objective, soc0, soc_init, actions);
}

ScheduleEvaluation evaluate_schedule(const Schedule& schedule, const DaySlice& slice,
                                     const SystemConfig& cfg) {
  if (schedule.steps.size() != static_cast<size_t>(cfg.horizon)) {
    throw UsageError("schedule has " + std::to_string(schedule.steps.size()) +
                     " steps, expected " + std::to_string(cfg.horizon));
  }
  if (slice.size() < schedule.steps.size()) {
    throw UsageError("day slice shorter than the schedule");
  }
  constexpr double kPowerTol = 1e-9;
  constexpr double kSocTol = 1e-6;
  const size_t n = cfg.num_dg();

  ScheduleEvaluation out;
  double soc = schedule.soc_init;
  if (soc < cfg.ess.e_min - kSocTol || soc > cfg.ess.e_max + kSocTol) out.feasible = false;
  std::vector<double> prev(n, 0.0);
  std::vector<bool> prev_on(n, false);

  for (size_t t = 0; t < schedule.steps.size(); ++t) {
    const ScheduleStep& st = schedule.steps[t];
    if (st.dg_power.size() != n || st.dg_on.size() != n) {
      throw UsageError("schedule step DG dimension does not match configuration");
    }
    double dg_total = 0.0;
    double dg_sum_cost = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const DGUnit& unit = cfg.dg_units[i];
      const double p = st.dg_power[i];
      if (st.dg_on[i]) {
        if (p < unit.p_min - kPowerTol || p > unit.p_max + kPowerTol) out.feasible = false;
        if (prev_on[i] && !ramp_ok(unit, prev[i], p)) out.feasible = false;
        dg_sum_cost += unit.a * p * p + unit.b * p + unit.c;
      } else if (p != 0.0) {
        out.feasible = false;
      }
      dg_total += p;
      prev[i] = p;
      prev_on[i] = st.dg_on[i];
    }
    if (std::abs(st.ess_power) > cfg.ess.p_limit + kPowerTol) out.feasible = false;
    soc = soc_transition(cfg.ess, soc, st.ess_power, cfg.delta_t);
    if (soc < cfg.ess.e_min - kSocTol || soc > cfg.ess.e_max + kSocTol) out.feasible = false;

    const double residual = slice.load[t] + st.ess_power - dg_total - slice.pv[t];
    const GridExchange ex = grid_exchange(residual, cfg.grid);
    const double exch = exchange_cost(slice.price[t], ex.grid_power, cfg.grid.sell_coefficient);
    out.total_cost += (dg_sum_cost + exch) * cfg.delta_t;
    out.total_unbalance += ex.unbalance;
  }
  return out;
}

LatticeScore score_on_lattice(const Schedule& schedule, const DaySlice& slice,
                              const SystemConfig& cfg, const Discretization& disc,
                              Objective objective) {
  if (schedule.steps.size() != static_cast<size_t>(cfg.horizon)) {
    throw UsageError("schedule length does not match the horizon");
  }
  check_inputs(slice, cfg, schedule.soc_init);
  const Lattice lattice(cfg, disc);
  const size_t n = lattice.num_units();

  int s = lattice.nearest_soc(schedule.soc_init);
  const int soc0 = s;
  std::vector<int> prev(n, 0);
  std::vector<LatticeAction> actions;
  for (const ScheduleStep& st : schedule.steps) {
    std::vector<int> levels(n, 0);
    for (size_t i = 0; i < n; ++i) {
      if (!st.dg_on[i]) continue;
      const auto& table = lattice.dg_levels()[i];
      double best = kInf;
      for (int to : lattice.successors(i, prev[i])) {
        if (to == 0) continue;
        const double d = std::abs(table[static_cast<size_t>(to)] - st.dg_power[i]);
        if (d < best) {
          best = d;
          levels[i] = to;
        }
      }
    }
    int ess = -1;
    double best = kInf;
    for (size_t e = 0; e < lattice.ess_levels().size(); ++e) {
      if (lattice.next_soc(s, static_cast<int>(e)) < 0) continue;
      const double d = std::abs(lattice.ess_levels()[e] - st.ess_power);
      if (d < best) {
        best = d;
        ess = static_cast<int>(e);
      }
    }
    actions.push_back({lattice.encode_tuple(levels), ess});
    s = lattice.next_soc(s, ess);
    prev = levels;
  }
  DPSolution replay =
      materialize(lattice, slice, cfg, objective, soc0, schedule.soc_init, actions);
  return {replay.objective, std::move(replay.schedule)};
}

void write_schedule_csv(const std::filesystem::path& path, const Schedule& schedule,
                        const SystemConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write schedule file: " + path.string());
  out << "hour";
  for (size_t i = 0; i < cfg.num_dg(); ++i) out << ",dg" << (i + 1) << "_kw";
  out << ",ess_kw,grid_kw,unbalance_kw,cost\n";
  char buf[64];
  auto field = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.10g", v);
    out << buf;
  };
  for (size_t t = 0; t < schedule.steps.size(); ++t) {
    const ScheduleStep& st = schedule.steps[t];
    out << t;
    for (double p : st.dg_power) field(p);
    field(st.ess_power);
    field(st.grid_power);
    field(st.unbalance);
    field(st.step_cost);
    out << '\n';
  }
}

}  // namespace msched
