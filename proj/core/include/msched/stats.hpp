#pragma once

#include <vector>

namespace msched {

struct ConfidenceInterval {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int n = 0;
};

// Two-sided 95% Student-t interval with n - 1 degrees of freedom. A single
// sample gives the degenerate interval (x, x, x). With floor_at_zero the lower
// bound is raised to 0 when negative (used for unbalance). Throws UsageError
// on an empty sample.
ConfidenceInterval confidence_interval(const std::vector<double>& samples,
                                       bool floor_at_zero = false);

}  // namespace msched
