#include <gtest/gtest.h>

#include <cmath>

#include "oad/classical.hpp"
#include "oad/dataset.hpp"

namespace oad {
namespace {

ImageU8 stripes(int index = 0) { return synthesize_one(CorpusKind::stripes, 21, index).pixels; }

ImageU8 rotated(const ImageU8& img, double deg) { return rotate_image(img, deg, FillPolicy::fill_black); }

ImageU8 noise(Rng& rng, int size = 128) {
  ImageU8 n(size, size, 3);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) n(y, x, c) = static_cast<std::uint8_t>(uniform_int(rng, 0, 255));
  return n;
}

double mod180_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 180.0);
  return std::min(d, 180.0 - d);
}

TEST(Config, Validation) {
  EstimatorConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.candidate_angles().size(), 180u);
  EXPECT_EQ(c.candidate_angles().front(), -45.0);
  c.angle_step = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.search_lo = 10;
  c.search_hi = 10;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.edge_threshold = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.band_lo = 0.5;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Methods, NamesRoundTrip) {
  for (auto m : {ClassicalMethod::hough_var, ClassicalMethod::hough_pow, ClassicalMethod::fourier})
    EXPECT_EQ(parse_classical_method(to_string(m)), m);
  EXPECT_EQ(to_string(ClassicalMethod::hough_var), "hough-var");
  EXPECT_THROW(parse_classical_method("radon"), InvalidArgument);
}

TEST(Hough, VoteTotalIsEdgesTimesThetas) {
  const EstimatorConfig cfg;
  const HoughAccumulator acc = hough_accumulate(to_gray(rotated(stripes(), 12)), cfg);
  EXPECT_GT(acc.edge_pixels, 0u);
  EXPECT_EQ(acc.theta_axis.size(), cfg.candidate_angles().size());
  EXPECT_EQ(static_cast<std::size_t>(acc.bins.rows()), acc.theta_axis.size());
  EXPECT_EQ(acc.total_votes(), static_cast<double>(acc.edge_pixels * acc.theta_axis.size()));
  EXPECT_GE(acc.bins.minCoeff(), 0.0);
}

TEST(Hough, VarExamples) {
  EXPECT_NEAR(estimate_hough_var(rotated(stripes(), 10)), 10.0, 1.0);
  EXPECT_NEAR(estimate_hough_var(stripes()), 0.0, 0.5);
  EXPECT_THROW(estimate_hough_var(ImageU8(96, 96, 3, 128)), NoStructure);
}

TEST(Hough, PowExamples) {
  EXPECT_NEAR(estimate_hough_pow(rotated(stripes(1), -20)), -20.0, 1.0);
  EXPECT_NEAR(estimate_hough_pow(stripes(1)), 0.0, 0.5);
  Rng rng(4);
  const ImageU8 board = make_checkerboard(128, 128, 12, rng);
  EXPECT_NEAR(estimate_hough_pow(rotated(board, 30)), 30.0, 1.0);
  EXPECT_THROW(estimate_hough_pow(ImageU8(96, 96, 3, 7)), NoStructure);
}

TEST(Fourier, Examples) {
  EXPECT_NEAR(estimate_fourier(rotated(stripes(2), 15)), 15.0, 1.5);
  EXPECT_NEAR(estimate_fourier(stripes(2)), 0.0, 0.5);
  EXPECT_THROW(estimate_fourier(ImageU8(63, 128, 3, 50)), InvalidArgument);
  EXPECT_THROW(estimate_fourier(ImageU8(96, 96, 3, 50)), NoStructure);
}

TEST(Fourier, GridsUseEdgeSpectrum) {
  Rng rng(6);
  const ImageU8 board = rotated(make_checkerboard(128, 128, 10, rng), 22);
  EXPECT_NEAR(estimate_fourier(board), 22.0, 1.5);
  // The raw intensity spectrum of a checkerboard peaks on its diagonals.
  EstimatorConfig raw;
  raw.spectrum_of_edges = false;
  EXPECT_GT(std::abs(estimate_fourier(board, raw) - 22.0), 30.0);
}

TEST(Fourier, NoiseIsFlaggedLowConfidence) {
  // Threshold check: the peak-to-mean ratio of 100 white-noise images must
  // stay under the default cut while clean stripes clear it by far.
  Rng rng(1234);
  const EstimatorConfig cfg;
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const FourierEstimate e = estimate_fourier_detailed(noise(rng), cfg);
    worst = std::max(worst, e.peak_to_mean);
    EXPECT_TRUE(e.low_confidence);
  }
  EXPECT_LT(worst, cfg.min_peak_to_mean);
  for (int i = 0; i < 5; ++i) {
    const FourierEstimate e = estimate_fourier_detailed(rotated(stripes(i), 7.0 * i - 14), cfg);
    EXPECT_FALSE(e.low_confidence);
    EXPECT_GT(e.peak_to_mean, 2 * cfg.min_peak_to_mean);
  }
}

TEST(AllMethods, Equivariance) {
  const EstimatorConfig cfg;
  for (auto m : {ClassicalMethod::hough_var, ClassicalMethod::hough_pow, ClassicalMethod::fourier}) {
    const ImageU8 base = rotated(stripes(3), 5);
    const double e0 = estimate_classical(m, base, cfg);
    for (double delta : {-25.0, 12.5, 30.0}) {
      const double e1 = estimate_classical(m, rotated(base, delta), cfg);
      EXPECT_NEAR(e1, e0 + delta, 2 * cfg.angle_step) << to_string(m) << " " << delta;
    }
  }
}

TEST(AllMethods, HalfTurnAmbiguity) {
  for (auto m : {ClassicalMethod::hough_var, ClassicalMethod::hough_pow, ClassicalMethod::fourier}) {
    for (double a : {-31.0, 8.0, 40.0}) {
      const ImageU8 img = rotated(stripes(4), a);
      const double e = estimate_classical(m, img);
      const double flipped = estimate_classical(m, rotated(img, 180));
      EXPECT_LT(mod180_gap(e, flipped), 1e-9) << to_string(m) << " " << a;
    }
  }
}

TEST(AllMethods, Deterministic) {
  const ImageU8 img = rotated(stripes(5), -17);
  for (auto m : {ClassicalMethod::hough_var, ClassicalMethod::hough_pow, ClassicalMethod::fourier})
    EXPECT_EQ(estimate_classical(m, img), estimate_classical(m, img));
}

TEST(AllMethods, StayInsideSearchRange) {
  EstimatorConfig cfg;
  cfg.search_lo = -20;
  cfg.search_hi = 20;
  Rng rng(8);
  for (int i = 0; i < 10; ++i) {
    const ImageU8 img = rotated(stripes(i), uniform(rng, -45, 45));
    for (auto m : {ClassicalMethod::hough_var, ClassicalMethod::hough_pow, ClassicalMethod::fourier}) {
      const double e = estimate_classical(m, img, cfg);
      EXPECT_GE(e, cfg.search_lo);
      EXPECT_LE(e, cfg.search_hi);
    }
  }
}

}  // namespace
}  // namespace oad
