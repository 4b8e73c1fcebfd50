#pragma once

#include <random>

#include "msched/config.hpp"
#include "msched/data.hpp"
#include "msched/oracle.hpp"

namespace msched::testing {

// A randomly drawn instance small enough for exhaustive enumeration.
struct TinyInstance {
  SystemConfig cfg;
  Discretization disc;
  DaySlice day;
  double soc_init = 0.0;
  Objective objective = Objective::kCostWithPenalty;
};

inline uint64_t lattice_schedule_count(const TinyInstance& inst) {
  const Lattice lattice(inst.cfg, inst.disc);
  const uint64_t per_step = lattice.dg_tuple_count() * lattice.ess_levels().size();
  uint64_t total = 1;
  for (int t = 0; t < inst.cfg.horizon; ++t) total *= per_step;
  return total;
}

// One or two DG units with at most four committed levels, a storage unit
// with up to five power levels, 1 to 3 steps; at most 1e5 lattice schedules.
inline TinyInstance random_tiny_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  TinyInstance inst;
  inst.disc.dg_step = 10.0;
  SystemConfig& cfg = inst.cfg;
  cfg.dg_units.clear();
  const int units = pick(1, 2);
  for (int i = 0; i < units; ++i) {
    DGUnit g;
    g.a = 0.01 * u(rng);
    g.b = 1.0 + 9.0 * u(rng);
    g.c = 20.0 * u(rng);
    g.p_min = 10.0 * pick(0, 3);
    g.p_max = g.p_min + 10.0 * pick(0, 3);
    g.ramp_up = 10.0 * pick(1, 3);
    g.ramp_down = 10.0 * pick(1, 3);
    cfg.dg_units.push_back(g);
  }
  cfg.ess.efficiency = 0.5 + 0.5 * u(rng);
  inst.disc.ess_step = 10.0;
  cfg.ess.p_limit = 10.0 * pick(0, 2);
  inst.disc.soc_step = 5.0 * pick(1, 2);
  cfg.ess.e_min = 10.0 * pick(0, 2);
  cfg.ess.e_max = cfg.ess.e_min + 10.0 * pick(1, 4);
  if (pick(0, 1)) cfg.ess.soc_mode = SocMode::kPhysical;
  cfg.grid.p_exchange_max = 10.0 * pick(1, 4);
  cfg.grid.sell_coefficient = u(rng);
  cfg.sigma1 = 0.01;
  cfg.sigma2 = pick(0, 1) ? 50.0 : 0.5 * u(rng);
  cfg.horizon = pick(1, 3);
  inst.day.day_index = 0;
  for (int t = 0; t < cfg.horizon; ++t) {
    inst.day.pv.push_back(30.0 * u(rng));
    inst.day.load.push_back(90.0 * u(rng));
    inst.day.price.push_back(2.0 * u(rng));
  }
  const Lattice lattice(cfg, inst.disc);
  const auto& levels = lattice.soc_levels();
  inst.soc_init = levels[static_cast<size_t>(pick(0, static_cast<int>(levels.size()) - 1))];
  inst.objective = pick(0, 3) == 0 ? Objective::kCostHardBalance : Objective::kCostWithPenalty;
  while (lattice_schedule_count(inst) > 100000) {
    --cfg.horizon;
    inst.day.pv.pop_back();
    inst.day.load.pop_back();
    inst.day.price.pop_back();
  }
  return inst;
}

}  // namespace msched::testing
