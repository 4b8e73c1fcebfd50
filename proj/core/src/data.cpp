#include "msched/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "msched/errors.hpp"

namespace msched {
namespace {

constexpr std::array<int, 12> kMonthLengths = {31, 28, 31, 30, 31, 30,
                                               31, 31, 30, 31, 30, 31};
constexpr int kTrainDaysPerMonth = 21;
constexpr char kProfileHeader[] = "hour,pv_kw,load_kw,price";

bool parse_field(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

// Day of month (1-based) for a 0-based day index, calendar repeating yearly.
int day_of_month(int day_index) {
  int d = day_index % 365;
  for (int len : kMonthLengths) {
    if (d < len) return d + 1;
    d -= len;
  }
  return d + 1;  // unreachable for d < 365
}

}  // namespace

double DaySlice::total_load() const {
  double total = 0.0;
  for (double v : load) total += v;
  return total;
}

void Profile::validate() const {
  if (pv.size() != load.size() || load.size() != price.size()) {
    throw ProfileLengthError("profile series have unequal lengths");
  }
  if (load.empty() || load.size() % kHoursPerDay != 0) {
    throw ProfileLengthError("profile length " + std::to_string(load.size()) +
                             " is not a positive multiple of 24");
  }
  for (size_t i = 0; i < load.size(); ++i) {
    if (pv[i] < 0.0 || load[i] < 0.0 || price[i] < 0.0) {
      throw NegativeValueError("negative value at hour " + std::to_string(i));
    }
  }
}

DaySlice Profile::day(int index) const {
  if (index < 0 || index >= days()) {
    throw UsageError("day index " + std::to_string(index) + " outside profile of " +
                     std::to_string(days()) + " days");
  }
  const auto first = static_cast<std::ptrdiff_t>(index) * kHoursPerDay;
  DaySlice slice;
  slice.day_index = index;
  slice.pv.assign(pv.begin() + first, pv.begin() + first + kHoursPerDay);
  slice.load.assign(load.begin() + first, load.begin() + first + kHoursPerDay);
  slice.price.assign(price.begin() + first, price.begin() + first + kHoursPerDay);
  return slice;
}

double Profile::pv_max() const {
  return pv.empty() ? 0.0 : *std::max_element(pv.begin(), pv.end());
}

double Profile::load_max() const {
  return load.empty() ? 0.0 : *std::max_element(load.begin(), load.end());
}

Profile load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("profile file not found: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw MalformedRowError("profile file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kProfileHeader) {
    throw MalformedRowError("expected header '" + std::string(kProfileHeader) +
                            "', got '" + line + "'");
  }

  Profile profile;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4 || line.back() == ',') {
      throw MalformedRowError("row " + std::to_string(row + 1) + ": expected 4 fields");
    }
    std::array<double, 4> v{};
    for (size_t k = 0; k < 4; ++k) {
      if (!parse_field(fields[k], v[k])) {
        throw MalformedRowError("row " + std::to_string(row + 1) + ": bad number '" +
                                fields[k] + "'");
      }
    }
    if (v[0] != static_cast<double>(row)) {
      throw MalformedRowError("row " + std::to_string(row + 1) + ": hour " + fields[0] +
                              " out of sequence");
    }
    if (v[1] < 0.0 || v[2] < 0.0 || v[3] < 0.0) {
      throw NegativeValueError("row " + std::to_string(row + 1) + ": negative value");
    }
    profile.pv.push_back(v[1]);
    profile.load.push_back(v[2]);
    profile.price.push_back(v[3]);
    ++row;
  }
  profile.validate();
  return profile;
}

void write_profiles(const std::filesystem::path& path, const Profile& profile) {
  profile.validate();
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write profile file: " + path.string());
  out << kProfileHeader << '\n';
  char buf[128];
  for (size_t i = 0; i < profile.load.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i, profile.pv[i],
                  profile.load[i], profile.price[i]);
    out << buf;
  }
}

Profile synthesize_profiles(uint64_t seed, int days, const SynthOptions& opts) {
  if (days < 1) throw UsageError("synthesize_profiles requires days >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  constexpr double kSolarNoon = 13.0;

  Profile p;
  const size_t hours = static_cast<size_t>(days) * kHoursPerDay;
  p.pv.reserve(hours);
  p.load.reserve(hours);
  p.price.reserve(hours);

  for (int d = 0; d < days; ++d) {
    const int doy = d % 365;
    const double summer = std::cos(kTwoPi * (doy - 172) / 365.0);
    const double day_length = 12.0 + 4.0 * summer;
    const double sunrise = kSolarNoon - 0.5 * day_length;
    const double pv_envelope = opts.pv_peak * (0.65 + 0.35 * summer);
    const double cloud = 0.3 + 0.7 * unit(rng);

    const bool weekend = (d % 7) >= 5;
    const bool event = unit(rng) < opts.event_probability;
    const double seasonal_load = 1.0 + opts.winter_boost * std::cos(kTwoPi * doy / 365.0);
    const double evening = opts.evening_peak * (event ? opts.event_factor : 1.0);

    for (int h = 0; h < kHoursPerDay; ++h) {
      const double x = (h + 0.5 - sunrise) / day_length;
      const double bell = (x > 0.0 && x < 1.0) ? std::sin(std::numbers::pi * x) : 0.0;
      const double pv_noise = std::max(0.0, 1.0 + 0.1 * gauss(rng));
      p.pv.push_back(h == 0 ? 0.0 : pv_envelope * cloud * bell * pv_noise);

      const double shape = opts.load_base +
                           opts.morning_peak * std::exp(-(h - 8.0) * (h - 8.0) / 4.0) +
                           evening * std::exp(-(h - 19.0) * (h - 19.0) / 5.0);
      const double noise = 1.0 + opts.noise * gauss(rng);
      p.load.push_back(std::max(
          0.0, shape * seasonal_load * (weekend ? opts.weekend_factor : 1.0) * noise));

      const bool peak = h >= 8 && h <= 21;
      p.price.push_back(peak ? opts.peak_price : opts.offpeak_price);
    }
  }
  return p;
}

SplitSpec split_train_test(const Profile& profile) {
  if (profile.days() < kMonthLengths[0]) {
    throw UsageError("train/test split requires at least one whole month of data");
  }
  SplitSpec split;
  for (int d = 0; d < profile.days(); ++d) {
    (day_of_month(d) <= kTrainDaysPerMonth ? split.train_days : split.test_days)
        .push_back(d);
  }
  return split;
}

int sample_training_day_index(const SplitSpec& split, std::mt19937_64& rng) {
  if (split.train_days.empty()) throw UsageError("training split is empty");
  std::uniform_int_distribution<int> pick(0, static_cast<int>(split.train_days.size()) - 1);
  return pick(rng);
}

DaySlice sample_training_day(const SplitSpec& split, const Profile& profile,
                             std::mt19937_64& rng) {
  return profile.day(split.train_days[sample_training_day_index(split, rng)]);
}

}  // namespace msched
