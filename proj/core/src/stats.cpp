#include "msched/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "msched/errors.hpp"

namespace msched {

ConfidenceInterval confidence_interval(const std::vector<double>& samples, bool floor_at_zero) {
  if (samples.empty()) throw UsageError("confidence interval of an empty sample");
  ConfidenceInterval ci;
  ci.n = static_cast<int>(samples.size());
  const double n = static_cast<double>(samples.size());
  ci.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  ci.lower = ci.upper = ci.mean;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double x : samples) ss += (x - ci.mean) * (x - ci.mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    const double half = boost::math::quantile(dist, 0.975) * sd / std::sqrt(n);
    ci.lower = ci.mean - half;
    ci.upper = ci.mean + half;
  }
  if (floor_at_zero && ci.lower < 0.0) ci.lower = 0.0;
  return ci;
}

}  // namespace msched
