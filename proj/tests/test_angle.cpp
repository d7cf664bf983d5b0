#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oad/angle.hpp"
#include "oad/random.hpp"
#include "test_oracles.hpp"

namespace oad {
namespace {

TEST(WrapDegrees, Examples) {
  EXPECT_EQ(wrap_degrees(0.0).degrees(), 0.0);
  EXPECT_EQ(wrap_degrees(365.0).degrees(), 5.0);
  EXPECT_EQ(wrap_degrees(-30.0).degrees(), 330.0);
  EXPECT_EQ(wrap_degrees(360.0).degrees(), 0.0);
  EXPECT_EQ(wrap_degrees(-720.0).degrees(), 0.0);
}

TEST(WrapDegrees, TinyNegativeStaysBelowFullTurn) {
  const double w = wrap_degrees(-1e-18).degrees();
  EXPECT_GE(w, 0.0);
  EXPECT_LT(w, 360.0);
}

TEST(WrapDegrees, RejectsNonFinite) {
  EXPECT_THROW(wrap_degrees(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
  EXPECT_THROW(wrap_degrees(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(WrapDegrees, IdempotentAndInRange) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double x = uniform(rng, -5000, 5000);
    const double w = wrap_degrees(x).degrees();
    ASSERT_GE(w, 0.0);
    ASSERT_LT(w, 360.0);
    ASSERT_EQ(wrap_degrees(w).degrees(), w);
  }
}

TEST(AngleTypes, ValidateRanges) {
  EXPECT_THROW(AngularError(-0.1), InvalidArgument);
  EXPECT_THROW(AngularError(180.5), InvalidArgument);
  EXPECT_NO_THROW(AngularError(180.0));
  EXPECT_THROW(SignedDelta(-180.0), InvalidArgument);
  EXPECT_NO_THROW(SignedDelta(180.0));
}

TEST(CircularDistance, Examples) {
  EXPECT_EQ(circular_distance(Angle(1), Angle(359)).degrees(), 2.0);
  EXPECT_EQ(circular_distance(Angle(10), Angle(200)).degrees(), 170.0);
  for (double t : {0.0, 17.5, 180.0, 359.9}) EXPECT_EQ(circular_distance(Angle(t), Angle(t)).degrees(), 0.0);
}

TEST(CircularDistance, MatchesBruteForceOracle) {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const Angle t(uniform(rng, 0, 360)), p(uniform(rng, 0, 360));
    ASSERT_NEAR(circular_distance(t, p).degrees(), testing_oracle::brute_distance(t.degrees(), p.degrees()), 1e-9);
  }
}

TEST(CircularDistance, MetricProperties) {
  Rng rng(5);
  for (int i = 0; i < 5000; ++i) {
    const Angle a(uniform(rng, 0, 360)), b(uniform(rng, 0, 360)), c(uniform(rng, 0, 360));
    const double shift = uniform(rng, -1000, 1000);
    const double ab = circular_distance(a, b).degrees();
    ASSERT_EQ(ab, circular_distance(b, a).degrees());
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 180.0);
    ASSERT_LE(circular_distance(a, c).degrees(), ab + circular_distance(b, c).degrees() + 1e-9);
    ASSERT_NEAR(circular_distance(wrap_degrees(a.degrees() + shift), wrap_degrees(b.degrees() + shift)).degrees(),
                ab, 1e-9);
  }
}

TEST(CircularDistance, EqualsAbsoluteDifferenceOnRestrictedRange) {
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) {
    const double t = uniform(rng, -90, 90), p = uniform(rng, -90, 90);
    ASSERT_EQ(circular_distance_raw(t, p), std::abs(t - p)) << t << " " << p;
    // Wrapping both sides first costs at most a rounding step.
    ASSERT_NEAR(circular_distance(wrap_degrees(t), wrap_degrees(p)).degrees(), std::abs(t - p), 1e-12);
  }
}

TEST(CircularDistance, RawFormMatchesOracle) {
  Rng rng(81);
  for (int i = 0; i < 10000; ++i) {
    const double t = uniform(rng, -360, 360), p = uniform(rng, -360, 360);
    ASSERT_NEAR(circular_distance_raw(t, p), testing_oracle::brute_distance(t, p), 1e-9);
  }
}

TEST(SignedDelta, Examples) {
  EXPECT_EQ(signed_shortest_delta(Angle(1), Angle(359)).degrees(), 2.0);
  EXPECT_EQ(signed_shortest_delta(Angle(359), Angle(1)).degrees(), -2.0);
  EXPECT_EQ(signed_shortest_delta(Angle(42), Angle(42)).degrees(), 0.0);
  EXPECT_EQ(signed_shortest_delta(Angle(180), Angle(0)).degrees(), 180.0);
  EXPECT_EQ(signed_shortest_delta(Angle(0), Angle(180)).degrees(), 180.0);
}

TEST(SignedDelta, MatchesEnumerationOracleAndRestoresTarget) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const Angle t(uniform(rng, 0, 360)), p(uniform(rng, 0, 360));
    const double d = signed_shortest_delta(t, p).degrees();
    ASSERT_NEAR(d, testing_oracle::enumerated_delta(t.degrees(), p.degrees()), 1e-9);
    ASSERT_NEAR(circular_distance(wrap_degrees(p.degrees() + d), t).degrees(), 0.0, 1e-9);
  }
}

TEST(CircularLoss, Examples) {
  const std::vector<Angle> t1{Angle(1)};
  const std::vector<double> p1{359};
  EXPECT_EQ(circular_loss<double>(t1, p1), 2.0);
  const std::vector<Angle> t2{Angle(10), Angle(350)};
  const std::vector<double> p2{10, 350};
  EXPECT_EQ(circular_loss<double>(t2, p2), 0.0);
  const std::vector<Angle> t3{Angle(0), Angle(0)};
  const std::vector<double> p3{90, 270};
  EXPECT_EQ(circular_loss<double>(t3, p3), 90.0);
  // Raw outputs are wrapped first.
  const std::vector<double> p4{-359.0};
  EXPECT_EQ(circular_loss<double>(t1, p4), 0.0);
}

TEST(CircularLoss, Errors) {
  const std::vector<Angle> none;
  const std::vector<double> no_pred;
  EXPECT_THROW(circular_loss<double>(none, no_pred), InvalidArgument);
  const std::vector<Angle> one{Angle(0)};
  const std::vector<double> two{0, 1};
  EXPECT_THROW(circular_loss<double>(one, two), InvalidArgument);
}

TEST(Subgradient, Examples) {
  EXPECT_EQ(circular_loss_subgradient(Angle(90), 80.0), -1.0);
  EXPECT_EQ(circular_loss_subgradient(Angle(90), 100.0), 1.0);
  EXPECT_EQ(circular_loss_subgradient(Angle(33), 33.0), 0.0);
  EXPECT_EQ(circular_loss_subgradient(Angle(0), 180.0), 0.0);
  // Across the seam: moving 359 up towards 361 = 1 shrinks the distance.
  EXPECT_EQ(circular_loss_subgradient(Angle(1), 359.0), -1.0);
}

TEST(Subgradient, MatchesCentralDifference) {
  Rng rng(77);
  int checked = 0;
  while (checked < 1000) {
    const Angle t(uniform(rng, 0, 360));
    const double p = uniform(rng, -360, 720);
    const double dist = circular_distance(t, wrap_degrees(p)).degrees();
    if (dist <= 0.01 || dist >= 179.99) continue;
    const double fd = testing_oracle::central_difference(t.degrees(), p, 1e-4);
    ASSERT_NEAR(circular_loss_subgradient(t, p), fd, 1e-3) << t.degrees() << " " << p;
    ++checked;
  }
}

TEST(MeanAbsoluteAngularError, Examples) {
  using P = std::pair<Angle, Angle>;
  const std::vector<P> a{{Angle(1), Angle(359)}, {Angle(359), Angle(1)}};
  EXPECT_EQ(mean_absolute_angular_error<double>(a), 2.0);
  const std::vector<P> b{{Angle(123), Angle(123)}};
  EXPECT_EQ(mean_absolute_angular_error<double>(b), 0.0);
  const std::vector<P> c{{Angle(0), Angle(90)}};
  EXPECT_EQ(mean_absolute_angular_error<double>(c), 90.0);
  const std::vector<P> none;
  EXPECT_THROW(mean_absolute_angular_error<double>(none), InvalidArgument);
}

TEST(SinCosDegrees, ExactAtQuarterTurns) {
  EXPECT_EQ(sincos_degrees(90.0), std::make_pair(1.0, 0.0));
  EXPECT_EQ(sincos_degrees(-90.0), std::make_pair(-1.0, 0.0));
  EXPECT_EQ(sincos_degrees(540.0), std::make_pair(0.0, -1.0));
  const auto [s, c] = sincos_degrees(30.0);
  EXPECT_NEAR(s, 0.5, 1e-15);
  EXPECT_NEAR(c, std::sqrt(3.0) / 2, 1e-15);
}

}  // namespace
}  // namespace oad
