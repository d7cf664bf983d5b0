#pragma once

// Reference computations written independently of the library, used to
// cross-check it in tests and in the acceptance run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace oad::testing_oracle {

/// min over k in -2..2 of |t - p + 360k|
inline double brute_distance(double t, double p) {
  double best = std::numeric_limits<double>::infinity();
  for (int k = -2; k <= 2; ++k) best = std::min(best, std::abs(t - p + 360.0 * k));
  return best;
}

/// The candidate t - p + 360k (k in -1..1) that lies in (-180, 180].
inline double enumerated_delta(double t, double p) {
  for (int k = -1; k <= 1; ++k) {
    const double d = t - p + 360.0 * k;
    if (d > -180.0 && d <= 180.0) return d;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Central difference of p -> brute_distance(t, p).
inline double central_difference(double t, double p, double h) {
  return (brute_distance(t, p + h) - brute_distance(t, p - h)) / (2 * h);
}

/// E|U - c| on the circle for U uniform on [0, 360): the distance is uniform
/// on [0, 180], so the mean is 90 for any c.
inline constexpr double kUniformCircularMae = 90.0;

}  // namespace oad::testing_oracle
