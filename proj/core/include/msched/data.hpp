#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace msched {

inline constexpr int kHoursPerDay = 24;

// One episode's exogenous inputs. Slices cut from a Profile carry 24 entries;
// hand-built slices for small test instances may be shorter but must cover
// the configured horizon.
struct DaySlice {
  int day_index = 0;
  std::vector<double> pv;     // kW
  std::vector<double> load;   // kW
  std::vector<double> price;  // $/kWh

  size_t size() const { return load.size(); }
  double total_load() const;
};

// Hourly aggregate PV, demand and tariff series.
struct Profile {
  std::vector<double> pv;
  std::vector<double> load;
  std::vector<double> price;

  void validate() const;
  int days() const { return static_cast<int>(load.size()) / kHoursPerDay; }
  DaySlice day(int index) const;
  double pv_max() const;
  double load_max() const;
};

struct SplitSpec {
  std::vector<int> train_days;
  std::vector<int> test_days;
};

// Shape parameters of the synthetic year. See docs/formats.md for the formula.
struct SynthOptions {
  double pv_peak = 300.0;         // kW at summer noon under clear sky
  double load_base = 250.0;       // kW
  double morning_peak = 150.0;    // kW added around 08:00
  double evening_peak = 350.0;    // kW added around 19:00
  double weekend_factor = 0.85;
  double winter_boost = 0.15;     // relative load increase at day 0
  double noise = 0.05;            // relative hourly load noise
  double event_probability = 0.03;
  double event_factor = 2.4;      // evening peak multiplier on event days
  double offpeak_price = 0.2;     // $/kWh, hours 0-7 and 22-23
  double peak_price = 0.5;        // $/kWh, hours 8-21
};

// CSV with header `hour,pv_kw,load_kw,price`, one row per hour.
Profile load_profiles(const std::filesystem::path& path);
void write_profiles(const std::filesystem::path& path, const Profile& profile);

Profile synthesize_profiles(uint64_t seed, int days, const SynthOptions& opts = {});

// Days 1-21 of each month go to training, the rest to testing. The calendar
// is a non-leap year starting on January 1; a trailing partial month keeps
// the same day-of-month rule.
SplitSpec split_train_test(const Profile& profile);

DaySlice sample_training_day(const SplitSpec& split, const Profile& profile,
                             std::mt19937_64& rng);

// Index into split.train_days drawn uniformly; exposed for statistical tests.
int sample_training_day_index(const SplitSpec& split, std::mt19937_64& rng);

}  // namespace msched
