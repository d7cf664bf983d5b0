#pragma once

// Non-learned orientation baselines: two Hough-transform scorings and a
// Fourier power-spectrum estimator.
//
// The scoring rules are reconstructions of the named behaviours, not
// transcriptions of a reference implementation:
//   hough-var  score(theta) = variance of the accumulator's rho profile over
//              the rho range the image actually spans at that theta.
//   hough-pow  score(theta) = sum of squared accumulator counts over rho.
//   fourier    energy of the tapered power spectrum (of the edge map by
//              default), binned by orientation over mid-frequency radii.
// Each returns the estimated applied (counter-clockwise) rotation inside the
// configured search range. Line-based methods cannot tell an image from its
// half-turn, and both families of a grid fold into a 90 degree window.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oad/image.hpp"

namespace oad {

enum class ClassicalMethod { hough_var, hough_pow, fourier };

std::string to_string(ClassicalMethod method);
ClassicalMethod parse_classical_method(const std::string& text);

struct EstimatorConfig {
  double search_lo = -45.0;
  double search_hi = 45.0;
  double angle_step = 0.5;
  /// Quantile of Sobel magnitudes above which a pixel votes.
  double edge_threshold = 0.9;
  /// 0 picks one bin per pixel of the image diagonal.
  int num_rho_bins = 0;
  /// Fourier mid-band, in cycles per pixel.
  double band_lo = 0.03;
  double band_hi = 0.40;
  /// Fourier estimates with a smaller orientation peak-to-mean ratio are
  /// flagged low-confidence.
  double min_peak_to_mean = 3.5;
  /// Transform the Sobel magnitude instead of raw intensity. Grids (crossing
  /// line families) put their intensity energy on the diagonals; their edge
  /// map puts it along the line normals.
  bool spectrum_of_edges = true;

  /// Throws InvalidArgument unless lo < hi, hi - lo <= 180, step > 0, the
  /// quantile lies in [0, 1) and the band is ordered.
  void validate() const;
  std::vector<double> candidate_angles() const;
};

struct HoughAccumulator {
  /// (theta index, rho index) -> votes.
  Eigen::ArrayXXd bins;
  std::vector<double> theta_axis;
  std::vector<double> rho_axis;
  std::size_t edge_pixels = 0;

  double total_votes() const { return bins.sum(); }
};

/// Sobel gradient magnitude; the one-pixel border is left at zero.
Plane<double> sobel_magnitude(const Plane<double>& gray);

/// Votes every edge pixel into one rho bin per candidate theta, where a line
/// tilted by theta (counter-clockwise) satisfies rho = dx sin(theta) + dy cos(theta)
/// about the image centre. Throws NoStructure when no pixel passes the edge test.
HoughAccumulator hough_accumulate(const Plane<double>& gray, const EstimatorConfig& cfg);

double estimate_hough_var(const ImageU8& img, const EstimatorConfig& cfg = {});
double estimate_hough_pow(const ImageU8& img, const EstimatorConfig& cfg = {});

struct FourierEstimate {
  double degrees = 0;
  double peak_to_mean = 0;
  bool low_confidence = false;
};

/// Throws InvalidArgument below 64x64 and NoStructure for a flat image.
FourierEstimate estimate_fourier_detailed(const ImageU8& img, const EstimatorConfig& cfg = {});
double estimate_fourier(const ImageU8& img, const EstimatorConfig& cfg = {});

double estimate_classical(ClassicalMethod method, const ImageU8& img, const EstimatorConfig& cfg = {});

}  // namespace oad
