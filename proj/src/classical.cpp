#include "oad/classical.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "oad/angle.hpp"
#include "oad/errors.hpp"

namespace oad {

std::string to_string(ClassicalMethod method) {
  switch (method) {
    case ClassicalMethod::hough_var: return "hough-var";
    case ClassicalMethod::hough_pow: return "hough-pow";
    case ClassicalMethod::fourier: return "fourier";
  }
  return "?";
}

ClassicalMethod parse_classical_method(const std::string& text) {
  if (text == "hough-var") return ClassicalMethod::hough_var;
  if (text == "hough-pow") return ClassicalMethod::hough_pow;
  if (text == "fourier") return ClassicalMethod::fourier;
  throw InvalidArgument("unknown method '" + text + "' (expected hough-var|hough-pow|fourier)");
}

void EstimatorConfig::validate() const {
  if (!(search_lo < search_hi)) throw InvalidArgument("estimator: search range needs lo < hi");
  if (search_hi - search_lo > 180) throw InvalidArgument("estimator: search range wider than 180");
  if (!(angle_step > 0)) throw InvalidArgument("estimator: angle_step must be > 0");
  if (!(edge_threshold >= 0 && edge_threshold < 1))
    throw InvalidArgument("estimator: edge_threshold is a quantile in [0, 1)");
  if (num_rho_bins < 0) throw InvalidArgument("estimator: num_rho_bins must be >= 0");
  if (!(band_lo >= 0 && band_lo < band_hi && band_hi <= 0.5))
    throw InvalidArgument("estimator: frequency band must satisfy 0 <= lo < hi <= 0.5");
}

std::vector<double> EstimatorConfig::candidate_angles() const {
  std::vector<double> out;
  const int n = static_cast<int>(std::ceil((search_hi - search_lo) / angle_step - 1e-9));
  for (int i = 0; i < n; ++i) out.push_back(search_lo + i * angle_step);
  return out;
}

namespace {

// Sub-step peak position by fitting a parabola through the best score and its
// neighbours.
double refine_peak(const std::vector<double>& thetas, const std::vector<double>& scores,
                   double step) {
  const auto best = static_cast<std::size_t>(
      std::max_element(scores.begin(), scores.end()) - scores.begin());
  double theta = thetas[best];
  if (best > 0 && best + 1 < scores.size()) {
    const double a = scores[best - 1], b = scores[best], c = scores[best + 1];
    const double denom = a - 2 * b + c;
    if (denom < 0) theta += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) * step;
  }
  return theta;
}

double hough_estimate(const ImageU8& img, const EstimatorConfig& cfg, bool variance) {
  cfg.validate();
  const Plane<double> gray = to_gray(img);
  const HoughAccumulator acc = hough_accumulate(gray, cfg);
  const double cx = (gray.cols() - 1) / 2.0;
  const double cy = (gray.rows() - 1) / 2.0;
  const double rho_lo = acc.rho_axis.front();
  const double rho_step = acc.rho_axis.size() > 1 ? acc.rho_axis[1] - acc.rho_axis[0] : 1.0;
  const auto n_rho = static_cast<Eigen::Index>(acc.rho_axis.size());

  std::vector<double> scores(acc.theta_axis.size());
  for (std::size_t t = 0; t < acc.theta_axis.size(); ++t) {
    const auto row = acc.bins.row(static_cast<Eigen::Index>(t));
    if (!variance) {
      scores[t] = row.square().sum();
      continue;
    }
    // Restrict to the rho interval covered by the image rectangle at this theta.
    const auto [s, c] = sincos_degrees(acc.theta_axis[t]);
    const double extent = std::abs(cx * s) + std::abs(cy * c);
    const auto b0 = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::floor((-extent - rho_lo) / rho_step + 0.5)), 0, n_rho - 1);
    const auto b1 = std::clamp<Eigen::Index>(
        static_cast<Eigen::Index>(std::floor((extent - rho_lo) / rho_step + 0.5)), 0, n_rho - 1);
    const auto seg = row.segment(b0, b1 - b0 + 1);
    const double mean = seg.mean();
    scores[t] = (seg - mean).square().mean();
  }
  return refine_peak(acc.theta_axis, scores, cfg.angle_step);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

Plane<double> sobel_magnitude(const Plane<double>& g) {
  const auto h = g.rows(), w = g.cols();
  Plane<double> mag = Plane<double>::Zero(h, w);
  for (Eigen::Index y = 1; y + 1 < h; ++y)
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      const double gx = (g(y - 1, x + 1) + 2 * g(y, x + 1) + g(y + 1, x + 1)) -
                        (g(y - 1, x - 1) + 2 * g(y, x - 1) + g(y + 1, x - 1));
      const double gy = (g(y + 1, x - 1) + 2 * g(y + 1, x) + g(y + 1, x + 1)) -
                        (g(y - 1, x - 1) + 2 * g(y - 1, x) + g(y - 1, x + 1));
      mag(y, x) = std::hypot(gx, gy);
    }
  return mag;
}

HoughAccumulator hough_accumulate(const Plane<double>& gray, const EstimatorConfig& cfg) {
  cfg.validate();
  const Plane<double> mag = sobel_magnitude(gray);
  const auto h = gray.rows(), w = gray.cols();
  if (h < 3 || w < 3) throw InvalidArgument("hough: image too small");

  std::vector<double> interior;
  interior.reserve(static_cast<std::size_t>((h - 2) * (w - 2)));
  for (Eigen::Index y = 1; y + 1 < h; ++y)
    for (Eigen::Index x = 1; x + 1 < w; ++x) interior.push_back(mag(y, x));
  const auto k = static_cast<std::size_t>(cfg.edge_threshold * static_cast<double>(interior.size()));
  std::nth_element(interior.begin(), interior.begin() + static_cast<std::ptrdiff_t>(k), interior.end());
  const double threshold = interior[k];
  const double floor = 1e-9 * std::max(1.0, mag.maxCoeff());

  HoughAccumulator acc;
  acc.theta_axis = cfg.candidate_angles();
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double radius = std::hypot(cx, cy);
  const int n_rho = cfg.num_rho_bins > 0 ? cfg.num_rho_bins
                                         : static_cast<int>(std::ceil(2 * radius)) + 1;
  const double rho_step = n_rho > 1 ? 2 * radius / (n_rho - 1) : 1.0;
  for (int i = 0; i < n_rho; ++i) acc.rho_axis.push_back(-radius + i * rho_step);
  acc.bins = Eigen::ArrayXXd::Zero(static_cast<Eigen::Index>(acc.theta_axis.size()), n_rho);

  std::vector<std::pair<double, double>> trig;
  for (double t : acc.theta_axis) trig.push_back(sincos_degrees(t));

  for (Eigen::Index y = 1; y + 1 < h; ++y)
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      const double m = mag(y, x);
      if (!(m > threshold && m > floor)) continue;
      ++acc.edge_pixels;
      const double dx = x - cx, dy = y - cy;
      for (std::size_t t = 0; t < trig.size(); ++t) {
        const double rho = dx * trig[t].first + dy * trig[t].second;
        const auto bin = std::clamp(static_cast<int>(std::floor((rho + radius) / rho_step + 0.5)), 0,
                                    n_rho - 1);
        acc.bins(static_cast<Eigen::Index>(t), bin) += 1;
      }
    }
  if (acc.edge_pixels == 0) throw NoStructure("hough: image has no edge pixels");
  return acc;
}

double estimate_hough_var(const ImageU8& img, const EstimatorConfig& cfg) {
  return hough_estimate(img, cfg, true);
}

double estimate_hough_pow(const ImageU8& img, const EstimatorConfig& cfg) {
  return hough_estimate(img, cfg, false);
}

FourierEstimate estimate_fourier_detailed(const ImageU8& img, const EstimatorConfig& cfg) {
  cfg.validate();
  if (img.height() < 64 || img.width() < 64)
    throw InvalidArgument("fourier: image must be at least 64x64 for windowing");
  Plane<double> g = cfg.spectrum_of_edges ? sobel_magnitude(to_gray(img)) : to_gray(img);
  const auto h = g.rows(), w = g.cols();
  g -= g.mean();

  // Radial Hann taper centred on the image.
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double radius = std::min(h, w) / 2.0;
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) {
      const double r = std::hypot(x - cx, y - cy);
      g(y, x) *= r < radius ? 0.5 * (1 + std::cos(M_PI * r / radius)) : 0.0;
    }

  // Zero padding refines the frequency grid so low-radius bins resolve angle.
  const auto n = static_cast<Eigen::Index>(
      std::max<std::size_t>(256, next_pow2(2 * static_cast<std::size_t>(std::max(h, w)))));
  using Complex = std::complex<double>;
  Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic> spec(n, n);
  spec.setZero();
  Eigen::FFT<double> fft;
  std::vector<Complex> in(n), row_out(n);
  for (Eigen::Index y = 0; y < h; ++y) {
    std::fill(in.begin(), in.end(), Complex(0));
    for (Eigen::Index x = 0; x < w; ++x) in[x] = g(y, x);
    fft.fwd(row_out, in);
    for (Eigen::Index u = 0; u < n; ++u) spec(y, u) = row_out[u];
  }
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) in[v] = spec(v, u);
    fft.fwd(row_out, in);
    for (Eigen::Index v = 0; v < n; ++v) spec(v, u) = row_out[v];
  }

  // Orientation histogram of line tilt over [0, 180). A frequency vector at
  // angle psi (y down) belongs to lines tilted by 90 - psi.
  const int n_bins = std::max(1, static_cast<int>(std::lround(180.0 / cfg.angle_step)));
  const double bin_width = 180.0 / n_bins;
  std::vector<double> hist(n_bins, 0.0);
  struct Sample {
    double tilt, energy;
  };
  std::vector<Sample> samples;
  double total = 0;
  for (Eigen::Index v = 0; v < n; ++v) {
    const double fy = static_cast<double>(v < n / 2 ? v : v - n) / n;
    for (Eigen::Index u = 0; u < n / 2 + 1; ++u) {  // the other half mirrors this one
      const double fx = static_cast<double>(u) / n;
      const double r = std::hypot(fx, fy);
      if (r < cfg.band_lo || r > cfg.band_hi) continue;
      const double e = std::norm(spec(v, u));
      if (e <= 0) continue;
      const double psi = std::atan2(fy, fx) * 180.0 / M_PI;
      double tilt = std::fmod(90.0 - psi, 180.0);
      if (tilt < 0) tilt += 180.0;
      samples.push_back({tilt, e});
      total += e;
      const double pos = tilt / bin_width;
      const int i0 = static_cast<int>(std::floor(pos));
      const double frac = pos - i0;
      hist[((i0 % n_bins) + n_bins) % n_bins] += e * (1 - frac);
      hist[((i0 + 1) % n_bins + n_bins) % n_bins] += e * frac;
    }
  }
  if (!(total > 0)) throw NoStructure("fourier: no spectral energy in the mid band");

  // Circular Gaussian smoothing (sigma = 1 degree).
  std::vector<double> smooth(n_bins, 0.0);
  const double sigma = std::max(1.0, 1.0 / bin_width);
  const int reach = static_cast<int>(std::ceil(3 * sigma));
  for (int i = 0; i < n_bins; ++i)
    for (int d = -reach; d <= reach; ++d)
      smooth[i] += hist[((i + d) % n_bins + n_bins) % n_bins] * std::exp(-0.5 * d * d / (sigma * sigma));

  auto hist_at = [&](double tilt) {
    double t = std::fmod(tilt, 180.0);
    if (t < 0) t += 180.0;
    const double pos = t / bin_width;
    const int i0 = static_cast<int>(std::floor(pos));
    const double frac = pos - i0;
    return smooth[((i0 % n_bins) + n_bins) % n_bins] * (1 - frac) +
           smooth[((i0 + 1) % n_bins + n_bins) % n_bins] * frac;
  };

  const std::vector<double> thetas = cfg.candidate_angles();
  std::vector<double> scores;
  for (double t : thetas) scores.push_back(hist_at(t));
  const double coarse = thetas[static_cast<std::size_t>(
      std::max_element(scores.begin(), scores.end()) - scores.begin())];

  // Energy-weighted mean tilt near the coarse peak (doubled angles handle the
  // 180 degree wrap).
  double sx = 0, sy = 0;
  const double window = std::max(3.0, 2 * cfg.angle_step);
  for (const auto& s : samples) {
    double d = std::fmod(s.tilt - coarse, 180.0);
    if (d < -90) d += 180;
    if (d > 90) d -= 180;
    if (std::abs(d) > window) continue;
    sx += s.energy * std::cos(2 * d * M_PI / 180.0);
    sy += s.energy * std::sin(2 * d * M_PI / 180.0);
  }
  double estimate = coarse + 0.5 * std::atan2(sy, sx) * 180.0 / M_PI;
  estimate = std::clamp(estimate, cfg.search_lo, cfg.search_hi);

  FourierEstimate out;
  out.degrees = estimate;
  const double mean = std::accumulate(smooth.begin(), smooth.end(), 0.0) / n_bins;
  out.peak_to_mean = *std::max_element(smooth.begin(), smooth.end()) / mean;
  out.low_confidence = out.peak_to_mean < cfg.min_peak_to_mean;
  return out;
}

double estimate_fourier(const ImageU8& img, const EstimatorConfig& cfg) {
  return estimate_fourier_detailed(img, cfg).degrees;
}

double estimate_classical(ClassicalMethod method, const ImageU8& img, const EstimatorConfig& cfg) {
  switch (method) {
    case ClassicalMethod::hough_var: return estimate_hough_var(img, cfg);
    case ClassicalMethod::hough_pow: return estimate_hough_pow(img, cfg);
    case ClassicalMethod::fourier: return estimate_fourier(img, cfg);
  }
  throw InvalidArgument("unknown classical method");
}

}  // namespace oad
