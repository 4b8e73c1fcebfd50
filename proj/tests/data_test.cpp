#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "msched/data.hpp"
#include "msched/errors.hpp"

namespace msched {
namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "msched_data_test";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string rows(int n, double pv = 1.0) {
  std::string s = "hour,pv_kw,load_kw,price\n";
  for (int i = 0; i < n; ++i) {
    s += std::to_string(i) + "," + std::to_string(pv) + ",100,0.2\n";
  }
  return s;
}

TEST(LoadProfiles, FullYear) {
  const fs::path p = temp_file("year.csv");
  write_text(p, rows(8760));
  const Profile prof = load_profiles(p);
  EXPECT_EQ(prof.days(), 365);
}

TEST(LoadProfiles, DistinctErrors) {
  EXPECT_THROW(load_profiles(temp_file("does_not_exist.csv")), MissingFileError);

  const fs::path neg = temp_file("neg.csv");
  std::string text = rows(24);
  text.replace(text.find("\n0,") + 3, 8, "-5.00000");
  write_text(neg, text);
  EXPECT_THROW(load_profiles(neg), NegativeValueError);

  const fs::path short_file = temp_file("short.csv");
  write_text(short_file, rows(25));
  EXPECT_THROW(load_profiles(short_file), ProfileLengthError);

  const fs::path ragged = temp_file("ragged.csv");
  write_text(ragged, "hour,pv_kw,load_kw,price\n0,1,2\n");
  EXPECT_THROW(load_profiles(ragged), MalformedRowError);

  const fs::path header = temp_file("header.csv");
  write_text(header, "h,pv,load,price\n");
  EXPECT_THROW(load_profiles(header), MalformedRowError);
}

TEST(LoadProfiles, RoundTrip) {
  const Profile a = synthesize_profiles(3, 40);
  const fs::path p = temp_file("roundtrip.csv");
  write_profiles(p, a);
  const Profile b = load_profiles(p);
  EXPECT_EQ(a.pv, b.pv);
  EXPECT_EQ(a.load, b.load);
  EXPECT_EQ(a.price, b.price);
}

TEST(Synthesize, DeterministicAndShaped) {
  const Profile a = synthesize_profiles(7, 365);
  const Profile b = synthesize_profiles(7, 365);
  EXPECT_EQ(a.pv, b.pv);
  EXPECT_EQ(a.load, b.load);
  EXPECT_EQ(a.price, b.price);
  EXPECT_NE(a.load, synthesize_profiles(8, 365).load);
  SynthOptions opts;
  for (int d = 0; d < a.days(); ++d) EXPECT_EQ(a.pv[static_cast<size_t>(d) * 24], 0.0);
  for (double p : a.price) {
    EXPECT_TRUE(p == opts.offpeak_price || p == opts.peak_price);
  }
  for (size_t h = 0; h < a.load.size(); ++h) {
    EXPECT_GE(a.pv[h], 0.0);
    EXPECT_GE(a.load[h], 0.0);
  }
  EXPECT_NO_THROW(a.validate());
}

TEST(Synthesize, ScarcityDaysExist) {
  // Peak demand above DG capacity plus the grid link on some days.
  const Profile a = synthesize_profiles(7, 365);
  const double capacity = 150 + 375 + 500 + 100 + 100;
  int scarce = 0;
  for (int d = 0; d < a.days(); ++d) {
    const DaySlice s = a.day(d);
    for (int h = 0; h < 24; ++h) {
      if (s.load[h] - s.pv[h] > capacity) {
        ++scarce;
        break;
      }
    }
  }
  EXPECT_GT(scarce, 0);
}

TEST(Synthesize, RejectsNonPositiveDays) {
  EXPECT_THROW(synthesize_profiles(1, 0), UsageError);
}

TEST(Split, CalendarYear) {
  const Profile p = synthesize_profiles(1, 365);
  const SplitSpec s = split_train_test(p);
  EXPECT_EQ(s.train_days.size(), 252u);
  EXPECT_EQ(s.test_days.size(), 113u);
  for (int d = 0; d < 21; ++d) EXPECT_EQ(s.train_days[d], d);
  for (int d = 21; d < 31; ++d) EXPECT_EQ(s.test_days[d - 21], d);
  // February: days 31..58 of the year, 21 train and 7 test.
  int feb_train = 0, feb_test = 0;
  for (int d : s.train_days) feb_train += (d >= 31 && d < 59);
  for (int d : s.test_days) feb_test += (d >= 31 && d < 59);
  EXPECT_EQ(feb_train, 21);
  EXPECT_EQ(feb_test, 7);

  std::set<int> all(s.train_days.begin(), s.train_days.end());
  for (int d : s.test_days) EXPECT_TRUE(all.insert(d).second);
  EXPECT_EQ(all.size(), 365u);
}

TEST(Split, TooShort) {
  EXPECT_THROW(split_train_test(synthesize_profiles(1, 20)), UsageError);
}

TEST(SampleTrainingDay, SingleDayAndReproducible) {
  const Profile p = synthesize_profiles(1, 365);
  SplitSpec one{{5}, {}};
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_training_day(one, p, rng).day_index, 5);

  const SplitSpec s = split_train_test(p);
  std::mt19937_64 r1(42), r2(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_training_day_index(s, r1), sample_training_day_index(s, r2));
  }
  EXPECT_THROW(sample_training_day(SplitSpec{}, p, rng), UsageError);
}

TEST(SampleTrainingDay, UniformWithinFiveSigma) {
  const SplitSpec s = split_train_test(synthesize_profiles(1, 365));
  const int n = 100000;
  const double k = static_cast<double>(s.train_days.size());
  std::vector<int> counts(s.train_days.size(), 0);
  std::mt19937_64 rng(2024);
  for (int i = 0; i < n; ++i) ++counts[static_cast<size_t>(sample_training_day_index(s, rng))];
  const double mean = n / k;
  const double sd = std::sqrt(n * (1.0 / k) * (1.0 - 1.0 / k));
  for (int c : counts) EXPECT_LT(std::abs(c - mean), 5.0 * sd);
}

}  // namespace
}  // namespace msched
