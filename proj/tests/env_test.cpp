#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "msched/env.hpp"
#include "msched/errors.hpp"

namespace msched {
namespace {

DaySlice flat_day(double pv, double load, double price, int hours = 24) {
  DaySlice d;
  d.pv.assign(hours, pv);
  d.load.assign(hours, load);
  d.price.assign(hours, price);
  return d;
}

const DGUnit kDG1{0.0034, 3.0, 30.0, 10.0, 150.0, 100.0, 100.0};
const DGUnit kDG2{0.001, 10.0, 40.0, 50.0, 375.0, 100.0, 100.0};

TEST(DgCost, ReferenceUnit) {
  EXPECT_NEAR(dg_cost(kDG1, 10.0, true), 60.34, 1e-12);
  EXPECT_NEAR(dg_cost(kDG1, 150.0, true), 556.5, 1e-12);
  EXPECT_EQ(dg_cost(kDG1, 0.0, false), 0.0);
  EXPECT_EQ(dg_cost(kDG2, 0.0, false), 0.0);
}

TEST(DgCost, OutOfRangeThrows) {
  EXPECT_THROW(dg_cost(kDG1, 5.0, true), ConstraintViolation);
  EXPECT_THROW(dg_cost(kDG1, 151.0, true), ConstraintViolation);
  EXPECT_THROW(dg_cost(kDG1, 20.0, false), ConstraintViolation);
}

TEST(DgCost, StrictlyIncreasingOnRange) {
  for (const DGUnit& u : SystemConfig::reference().dg_units) {
    double prev = dg_cost(u, u.p_min, true);
    for (double p = u.p_min + 0.5; p <= u.p_max; p += 0.5) {
      const double c = dg_cost(u, p, true);
      EXPECT_GT(c, prev);
      prev = c;
    }
  }
}

TEST(ExchangeCost, BuyAndSell) {
  EXPECT_DOUBLE_EQ(exchange_cost(0.5, 100.0, 0.5), 50.0);
  EXPECT_DOUBLE_EQ(exchange_cost(0.5, -100.0, 0.5), -25.0);
  EXPECT_EQ(exchange_cost(0.5, 0.0, 0.5), 0.0);
}

TEST(SocTransition, LiteralAndPhysical) {
  ESSUnit ess;
  EXPECT_DOUBLE_EQ(soc_transition(ess, 250.0, 100.0, 1.0), 340.0);
  EXPECT_DOUBLE_EQ(soc_transition(ess, 250.0, -100.0, 1.0), 160.0);
  EXPECT_DOUBLE_EQ(soc_transition(ess, 250.0, 0.0, 1.0), 250.0);
  ess.soc_mode = SocMode::kPhysical;
  EXPECT_DOUBLE_EQ(soc_transition(ess, 250.0, 100.0, 1.0), 340.0);
  EXPECT_NEAR(soc_transition(ess, 250.0, -90.0, 1.0), 150.0, 1e-12);
}

TEST(GridExchange, Clamp) {
  GridLink g;
  auto a = grid_exchange(150.0, g);
  EXPECT_EQ(a.grid_power, 100.0);
  EXPECT_EQ(a.unbalance, 50.0);
  auto b = grid_exchange(-150.0, g);
  EXPECT_EQ(b.grid_power, -100.0);
  EXPECT_EQ(b.unbalance, 50.0);
  auto c = grid_exchange(0.0, g);
  EXPECT_EQ(c.grid_power, 0.0);
  EXPECT_EQ(c.unbalance, 0.0);
}

TEST(ProjectAction, BelowThresholdIsOff) {
  const SystemConfig cfg = SystemConfig::reference();
  EnvState s = reset(flat_day(0, 100, 0.2), 250.0, cfg);
  RawAction raw{{-1.0, -0.95, -0.9}, 0.0};
  const AppliedAction a = project_action(raw, s, cfg);
  EXPECT_FALSE(a.dg_on[0]);
  EXPECT_EQ(a.dg_power[0], 0.0);
  EXPECT_FALSE(a.dg_on[1]);
  EXPECT_TRUE(a.dg_on[2]);
  EXPECT_DOUBLE_EQ(a.dg_power[2], cfg.dg_units[2].p_min);
}

TEST(ProjectAction, FullActionIsPmax) {
  const SystemConfig cfg = SystemConfig::reference();
  EnvState s = reset(flat_day(0, 100, 0.2), 250.0, cfg);
  const AppliedAction a = project_action({{1.0, 1.0, 1.0}, 0.0}, s, cfg);
  for (size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(a.dg_power[i], cfg.dg_units[i].p_max);
}

TEST(ProjectAction, EssClippedBySoc) {
  const SystemConfig cfg = SystemConfig::reference();
  EnvState s = reset(flat_day(0, 100, 0.2), 480.0, cfg);
  const AppliedAction a = project_action({{-1, -1, -1}, 1.0}, s, cfg);
  EXPECT_NEAR(a.ess_power, 20.0 / 0.9, 1e-9);
  EXPECT_LE(soc_transition(cfg.ess, 480.0, a.ess_power, 1.0), cfg.ess.e_max);
}

TEST(ProjectAction, RampLimitsCommittedUnit) {
  const SystemConfig cfg = SystemConfig::reference();
  EnvState s = reset(flat_day(0, 100, 0.2), 250.0, cfg);
  s.prev_dg_power = {0.0, 50.0, 0.0};
  const AppliedAction a = project_action({{-1, 1.0, -1}, 0.0}, s, cfg);
  EXPECT_DOUBLE_EQ(a.dg_power[1], 150.0);
}

TEST(ProjectAction, NonFiniteMeansOff) {
  const SystemConfig cfg = SystemConfig::reference();
  EnvState s = reset(flat_day(0, 100, 0.2), 250.0, cfg);
  const AppliedAction a = project_action({{NAN, INFINITY, -INFINITY}, NAN}, s, cfg);
  EXPECT_FALSE(a.dg_on[0]);
  EXPECT_FALSE(a.dg_on[1]);
  EXPECT_FALSE(a.dg_on[2]);
  EXPECT_LE(a.ess_power, 0.0);
}

TEST(Step, RewardExamples) {
  SystemConfig cfg = SystemConfig::reference();
  // DG1 at 150 kW costs 556.5; load of 150 kW balances it.
  DaySlice d = flat_day(0.0, 150.0, 0.2);
  EnvState s = reset(d, 250.0, cfg);
  StepOutcome out = step(s, {{1.0, -1, -1}, 0.0}, d, cfg);
  EXPECT_NEAR(out.reward, -0.01 * 556.5, 1e-12);
  EXPECT_EQ(out.unbalance, 0.0);

  // 260 kW load leaves 110 kW residual, 10 kW beyond the grid cap.
  d = flat_day(0.0, 260.0, 0.2);
  s = reset(d, 250.0, cfg);
  out = step(s, {{1.0, -1, -1}, 0.0}, d, cfg);
  EXPECT_NEAR(out.unbalance, 10.0, 1e-12);
  EXPECT_NEAR(out.reward, -0.01 * (556.5 + 0.2 * 100.0) - 50.0 * 10.0, 1e-9);
}

TEST(Step, AllOffZeroDayIsFree) {
  const SystemConfig cfg = SystemConfig::reference();
  const DaySlice d = flat_day(0.0, 0.0, 0.3);
  const StepOutcome out = step(reset(d, 250.0, cfg), {{-1, -1, -1}, 0.0}, d, cfg);
  EXPECT_EQ(out.reward, 0.0);
  EXPECT_EQ(out.unbalance, 0.0);
}

TEST(Step, FinishedEpisodeThrows) {
  SystemConfig cfg = SystemConfig::reference();
  cfg.horizon = 2;
  Environment env(cfg);
  env.reset(flat_day(0, 50, 0.2), 250.0);
  env.step({{-1, -1, -1}, 0.0});
  const StepOutcome last = env.step({{-1, -1, -1}, 0.0});
  EXPECT_TRUE(last.done);
  EXPECT_TRUE(env.done());
  EXPECT_THROW(env.step({{-1, -1, -1}, 0.0}), UsageError);
}

TEST(Step, NextStateCarriesInputs) {
  const SystemConfig cfg = SystemConfig::reference();
  DaySlice d = flat_day(0, 0, 0.2);
  for (int h = 0; h < 24; ++h) {
    d.pv[h] = h;
    d.load[h] = 100 + h;
  }
  const StepOutcome out = step(reset(d, 250.0, cfg), {{0.0, -1, -1}, 0.5}, d, cfg);
  EXPECT_EQ(out.next_state.t, 1);
  EXPECT_EQ(out.next_state.pv, 1.0);
  EXPECT_EQ(out.next_state.load, 101.0);
  EXPECT_EQ(out.next_state.prev_dg_power, out.applied.dg_power);
  EXPECT_DOUBLE_EQ(out.next_state.soc, 250.0 + 0.9 * 50.0);
}

TEST(Reset, Bounds) {
  const SystemConfig cfg = SystemConfig::reference();
  const DaySlice d = flat_day(3, 7, 0.2);
  const EnvState s = reset(d, cfg.ess.e_min, cfg);
  EXPECT_EQ(s.soc, cfg.ess.e_min);
  EXPECT_EQ(s.t, 0);
  EXPECT_EQ(s.pv, 3.0);
  EXPECT_EQ(s.load, 7.0);
  EXPECT_EQ(s.prev_dg_power, std::vector<double>(3, 0.0));
  EXPECT_THROW(reset(d, cfg.ess.e_max + 1, cfg), ConstraintViolation);
  EXPECT_THROW(reset(flat_day(0, 0, 0, 10), 250.0, cfg), UsageError);
}

TEST(Observe, Normalization) {
  SystemConfig cfg = SystemConfig::reference();
  cfg.obs_scale = {200.0, 400.0};
  const DaySlice d = flat_day(100, 100, 0.2);
  EnvState s = reset(d, cfg.ess.e_max, cfg);
  s.t = 12;
  s.prev_dg_power = {75.0, 0.0, 500.0};
  const auto f = observe(s, d, cfg);
  ASSERT_EQ(f.size(), 7u);
  EXPECT_DOUBLE_EQ(f[0], 0.5);
  EXPECT_DOUBLE_EQ(f[1], 0.25);
  EXPECT_DOUBLE_EQ(f[2], 0.5);
  EXPECT_DOUBLE_EQ(f[3], 0.0);
  EXPECT_DOUBLE_EQ(f[4], 1.0);
  EXPECT_DOUBLE_EQ(f[5], 1.0);
  EXPECT_DOUBLE_EQ(f[6], 0.5);
  s.soc = cfg.ess.e_min;
  EXPECT_EQ(observe(s, d, cfg)[5], 0.0);
  cfg.include_time_feature = false;
  EXPECT_EQ(observe(s, d, cfg).size(), 6u);
}

// Random states and actions: every projected action is admissible, and the
// reward and energy balance identities hold.
TEST(StepProperty, FuzzInvariants) {
  for (const SocMode mode : {SocMode::kLiteral, SocMode::kPhysical}) {
    SystemConfig cfg = SystemConfig::reference();
    cfg.ess.soc_mode = mode;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DaySlice d = flat_day(0, 0, 0);
    for (int i = 0; i < 5000; ++i) {
      EnvState s;
      s.t = static_cast<int>(rng() % 24);
      for (int h = 0; h < 24; ++h) {
        d.pv[h] = 400.0 * (0.5 + 0.5 * u(rng));
        d.load[h] = 900.0 * (0.5 + 0.5 * u(rng));
        d.price[h] = 0.5 + 0.5 * u(rng);
      }
      s.pv = d.pv[s.t];
      s.load = d.load[s.t];
      s.prev_dg_power.resize(3);
      for (size_t k = 0; k < 3; ++k) {
        const DGUnit& g = cfg.dg_units[k];
        s.prev_dg_power[k] = u(rng) < -0.3 ? 0.0 : g.p_min + (g.p_max - g.p_min) * (0.5 + 0.5 * u(rng));
      }
      s.soc = cfg.ess.e_min + (cfg.ess.e_max - cfg.ess.e_min) * (0.5 + 0.5 * u(rng));
      RawAction raw{{u(rng), u(rng), u(rng)}, u(rng)};
      const StepOutcome out = step(s, raw, d, cfg);
      const AppliedAction& a = out.applied;
      for (size_t k = 0; k < 3; ++k) {
        const DGUnit& g = cfg.dg_units[k];
        if (!a.dg_on[k]) {
          ASSERT_EQ(a.dg_power[k], 0.0);
          continue;
        }
        ASSERT_GE(a.dg_power[k], g.p_min);
        ASSERT_LE(a.dg_power[k], g.p_max);
        if (s.prev_dg_power[k] > 0.0) {
          ASSERT_LE(a.dg_power[k] - s.prev_dg_power[k], g.ramp_up + 1e-9);
          ASSERT_LE(s.prev_dg_power[k] - a.dg_power[k], g.ramp_down + 1e-9);
        }
      }
      ASSERT_LE(std::abs(a.ess_power), cfg.ess.p_limit);
      const double next_soc = soc_transition(cfg.ess, s.soc, a.ess_power, cfg.delta_t);
      ASSERT_GE(next_soc, cfg.ess.e_min);
      ASSERT_LE(next_soc, cfg.ess.e_max);
      ASSERT_LE(std::abs(out.grid_power), cfg.grid.p_exchange_max);
      ASSERT_GE(out.unbalance, 0.0);
      ASSERT_NEAR(out.reward + cfg.sigma1 * cfg.delta_t * (out.dg_cost + out.exchange_cost) +
                      cfg.sigma2 * out.unbalance,
                  0.0, 1e-9);
      const double supply = a.dg_power[0] + a.dg_power[1] + a.dg_power[2] + d.pv[s.t] +
                            out.grid_power;
      const double sign = out.residual >= 0.0 ? 1.0 : -1.0;
      ASSERT_NEAR(supply - a.ess_power - d.load[s.t] + sign * out.unbalance, 0.0, 1e-9);
      ASSERT_EQ(out.unbalance == 0.0, std::abs(out.residual) <= cfg.grid.p_exchange_max);
      ASSERT_EQ(out, step(s, raw, d, cfg));
    }
  }
}

}  // namespace
}  // namespace msched
