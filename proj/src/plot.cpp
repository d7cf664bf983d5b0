#include <algorithm>
#include <cmath>

#include "oad/errors.hpp"
#include "oad/evaluation.hpp"
#include "oad/image_io.hpp"

namespace oad {

std::array<double, 180> error_histogram(const EvalReport& report) {
  std::array<double, 180> bins{};
  if (report.per_sample.empty()) return bins;
  for (const auto& s : report.per_sample) {
    const int b = std::min(179, static_cast<int>(std::floor(s.error.degrees())));
    bins[b] += 1.0;
  }
  for (double& v : bins) v /= static_cast<double>(report.per_sample.size());
  return bins;
}

void plot_error_histogram(const EvalReport& report, const std::filesystem::path& path) {
  if (report.per_sample.empty()) throw InvalidArgument("plot_error_histogram: empty report");
  const auto bins = error_histogram(report);
  const double peak = *std::max_element(bins.begin(), bins.end());

  // 4 px per degree; ticks every 30 degrees below the axis.
  constexpr int kBar = 4, kMargin = 20, kPlotH = 240;
  const int w = 180 * kBar + 2 * kMargin;
  const int h = kPlotH + 2 * kMargin;
  const int base = kMargin + kPlotH;
  ImageU8 img(h, w, 3, 255);
  auto put = [&](int y, int x, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    img(y, x, 0) = r;
    img(y, x, 1) = g;
    img(y, x, 2) = b;
  };
  for (int b = 0; b < 180; ++b) {
    const int bar = static_cast<int>(std::lround(bins[b] / peak * kPlotH));
    for (int y = base - bar; y < base; ++y)
      for (int x = kMargin + b * kBar; x < kMargin + (b + 1) * kBar - 1; ++x) put(y, x, 40, 80, 160);
  }
  for (int x = kMargin - 1; x <= kMargin + 180 * kBar; ++x) put(base, x, 0, 0, 0);
  for (int y = kMargin; y <= base; ++y) put(y, kMargin - 1, 0, 0, 0);
  for (int deg = 0; deg <= 180; deg += 30)
    for (int y = base + 1; y < base + 6; ++y) put(y, kMargin + deg * kBar - (deg == 180), 0, 0, 0);
  write_png(path, img);
}

}  // namespace oad
