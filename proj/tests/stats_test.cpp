#include <gtest/gtest.h>

#include "msched/errors.hpp"
#include "msched/stats.hpp"

namespace msched {
namespace {

TEST(ConfidenceInterval, FiveSamples) {
  const ConfidenceInterval ci = confidence_interval({1, 2, 3, 4, 5});
  EXPECT_DOUBLE_EQ(ci.mean, 3.0);
  // t_{0.975, 4} = 2.776445..., sd = sqrt(2.5)
  EXPECT_NEAR(ci.lower, 1.0368, 1e-4);
  EXPECT_NEAR(ci.upper, 4.9632, 1e-4);
  EXPECT_EQ(ci.n, 5);
}

TEST(ConfidenceInterval, TwoSamples) {
  const ConfidenceInterval ci = confidence_interval({0, 2});
  EXPECT_NEAR(ci.upper - ci.mean, 12.7062047, 1e-6);
}

TEST(ConfidenceInterval, DegenerateCases) {
  const ConfidenceInterval one = confidence_interval({7.5});
  EXPECT_EQ(one.mean, 7.5);
  EXPECT_EQ(one.lower, 7.5);
  EXPECT_EQ(one.upper, 7.5);
  const ConfidenceInterval same = confidence_interval({2, 2, 2});
  EXPECT_EQ(same.lower, 2.0);
  EXPECT_EQ(same.upper, 2.0);
  EXPECT_THROW(confidence_interval({}), UsageError);
}

TEST(ConfidenceInterval, FloorAtZero) {
  const ConfidenceInterval raw = confidence_interval({0, 0, 0, 5});
  ASSERT_LT(raw.lower, 0.0);
  const ConfidenceInterval floored = confidence_interval({0, 0, 0, 5}, true);
  EXPECT_EQ(floored.lower, 0.0);
  EXPECT_EQ(floored.upper, raw.upper);
}

}  // namespace
}  // namespace msched
