#pragma once

// Circular angle arithmetic in degrees. Every value that represents an
// orientation is an Angle wrapped to [0, 360); distances between orientations
// are measured along the shorter arc and live in [0, 180].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>

#include "oad/errors.hpp"

namespace oad {

template <typename Scalar>
inline constexpr Scalar kFullTurn = Scalar(360);
template <typename Scalar>
inline constexpr Scalar kHalfTurn = Scalar(180);

/// Reduces any finite value into [0, 360). Throws InvalidArgument on NaN/inf.
template <typename Scalar>
Scalar wrap_degrees_value(Scalar x) {
  if (!std::isfinite(x)) throw InvalidArgument("wrap_degrees: non-finite input");
  Scalar r = std::fmod(x, kFullTurn<Scalar>);
  if (r < Scalar(0)) r += kFullTurn<Scalar>;
  // fmod of a tiny negative number plus 360 can round up to exactly 360.
  if (r >= kFullTurn<Scalar>) r -= kFullTurn<Scalar>;
  return r;
}

/// An orientation in degrees, always in [0, 360).
template <typename Scalar>
class BasicAngle {
 public:
  constexpr BasicAngle() = default;
  explicit BasicAngle(Scalar degrees) : degrees_(wrap_degrees_value(degrees)) {}

  Scalar degrees() const noexcept { return degrees_; }

  friend bool operator==(BasicAngle a, BasicAngle b) noexcept {
    return a.degrees_ == b.degrees_;
  }

 private:
  Scalar degrees_ = Scalar(0);
};

/// Shortest-arc distance between two orientations, in [0, 180].
template <typename Scalar>
class BasicAngularError {
 public:
  constexpr BasicAngularError() = default;
  explicit BasicAngularError(Scalar degrees) : degrees_(degrees) {
    if (!(degrees >= Scalar(0) && degrees <= kHalfTurn<Scalar>))
      throw InvalidArgument("AngularError must lie in [0, 180]");
  }
  Scalar degrees() const noexcept { return degrees_; }

 private:
  Scalar degrees_ = Scalar(0);
};

/// Signed rotation along the shorter arc, in (-180, 180].
template <typename Scalar>
class BasicSignedDelta {
 public:
  constexpr BasicSignedDelta() = default;
  explicit BasicSignedDelta(Scalar degrees) : degrees_(degrees) {
    if (!(degrees > -kHalfTurn<Scalar> && degrees <= kHalfTurn<Scalar>))
      throw InvalidArgument("SignedDelta must lie in (-180, 180]");
  }
  Scalar degrees() const noexcept { return degrees_; }

 private:
  Scalar degrees_ = Scalar(0);
};

using Angle = BasicAngle<double>;
using AngularError = BasicAngularError<double>;
using SignedDelta = BasicSignedDelta<double>;

template <typename Scalar>
BasicAngle<Scalar> wrap_degrees(Scalar x) {
  return BasicAngle<Scalar>(x);
}

/// min(|t - p|, 360 - |t - p|)
template <typename Scalar>
BasicAngularError<Scalar> circular_distance(BasicAngle<Scalar> t, BasicAngle<Scalar> p) {
  const Scalar d = std::abs(t.degrees() - p.degrees());
  return BasicAngularError<Scalar>(std::min(d, kFullTurn<Scalar> - d));
}

/// Circular distance between two unwrapped values, taken from their raw
/// difference so that |a - b| <= 180 comes back unchanged.
template <typename Scalar>
Scalar circular_distance_raw(Scalar a, Scalar b) {
  const Scalar d = std::fmod(std::abs(a - b), kFullTurn<Scalar>);
  if (!std::isfinite(d)) throw InvalidArgument("circular_distance: non-finite input");
  return std::min(d, kFullTurn<Scalar> - d);
}

/// The delta in (-180, 180] such that wrap(p + delta) == t.
template <typename Scalar>
BasicSignedDelta<Scalar> signed_shortest_delta(BasicAngle<Scalar> t, BasicAngle<Scalar> p) {
  Scalar d = t.degrees() - p.degrees();
  if (d > kHalfTurn<Scalar>) d -= kFullTurn<Scalar>;
  if (d <= -kHalfTurn<Scalar>) d += kFullTurn<Scalar>;
  return BasicSignedDelta<Scalar>(d);
}

/// d/dp of circular_distance(t, wrap(p)). Zero at both kinks (distance 0 and
/// distance 180), otherwise -sign of the shortest delta.
template <typename Scalar>
Scalar circular_loss_subgradient(BasicAngle<Scalar> t, Scalar p_raw) {
  const Scalar delta = signed_shortest_delta(t, wrap_degrees(p_raw)).degrees();
  if (delta == Scalar(0) || delta == kHalfTurn<Scalar>) return Scalar(0);
  return delta > Scalar(0) ? Scalar(-1) : Scalar(1);
}

/// Mean circular distance between truths and wrapped raw predictions.
template <typename Scalar>
Scalar circular_loss(std::span<const BasicAngle<Scalar>> truths,
                     std::span<const Scalar> raw_predictions) {
  if (truths.empty()) throw InvalidArgument("circular_loss: empty input");
  if (truths.size() != raw_predictions.size())
    throw InvalidArgument("circular_loss: truths and predictions differ in length");
  Scalar sum = 0;
  for (std::size_t i = 0; i < truths.size(); ++i)
    sum += circular_distance_raw(truths[i].degrees(), raw_predictions[i]);
  return sum / static_cast<Scalar>(truths.size());
}

/// Circular MAE over (truth, prediction) pairs.
template <typename Scalar>
Scalar mean_absolute_angular_error(
    std::span<const std::pair<BasicAngle<Scalar>, BasicAngle<Scalar>>> pairs) {
  if (pairs.empty()) throw InvalidArgument("mean_absolute_angular_error: empty input");
  Scalar sum = 0;
  for (const auto& [t, p] : pairs) sum += circular_distance(t, p).degrees();
  return sum / static_cast<Scalar>(pairs.size());
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90.
template <typename Scalar>
std::pair<Scalar, Scalar> sincos_degrees(Scalar degrees) {
  const Scalar w = wrap_degrees_value(degrees);
  if (w == Scalar(0)) return {Scalar(0), Scalar(1)};
  if (w == Scalar(90)) return {Scalar(1), Scalar(0)};
  if (w == Scalar(180)) return {Scalar(0), Scalar(-1)};
  if (w == Scalar(270)) return {Scalar(-1), Scalar(0)};
  const Scalar r = w * Scalar(M_PI) / kHalfTurn<Scalar>;
  return {std::sin(r), std::cos(r)};
}

}  // namespace oad
