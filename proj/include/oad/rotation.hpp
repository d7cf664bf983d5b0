#pragma once

// Image rotation about the centre with bilinear interpolation.
//
// Convention used across the project: a positive angle rotates the content
// counter-clockwise as displayed (x right, y down). The label of a synthetic
// sample is the rotation applied to the upright image, so correcting an image
// means rotating it by the negated estimate.

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include "oad/angle.hpp"
#include "oad/image.hpp"

namespace oad {

enum class FillPolicy { fill_black, center_crop };

std::string to_string(FillPolicy policy);
FillPolicy parse_fill_policy(const std::string& text);

struct CropRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// Largest centred rectangle with the canvas' aspect ratio whose pixel centres
/// all map inside the source after rotating a height x width canvas by
/// `degrees`.
CropRect fill_free_rect(int height, int width, double degrees);

template <typename Scalar>
Plane<Scalar> crop(const Plane<Scalar>& p, const CropRect& r) {
  return p.block(r.y, r.x, r.height, r.width);
}

template <typename Scalar>
Image<Scalar> crop(const Image<Scalar>& img, const CropRect& r) {
  std::vector<Plane<Scalar>> out;
  for (int c = 0; c < img.channels(); ++c) out.push_back(crop(img.plane(c), r));
  return Image<Scalar>(std::move(out));
}

/// Rotates every channel plane; pixels whose source falls outside the canvas
/// take `fill`.
template <typename Scalar>
Plane<Scalar> rotate_plane(const Plane<Scalar>& src, double degrees, Scalar fill = Scalar(0)) {
  if (!std::isfinite(degrees)) throw InvalidArgument("rotate: non-finite angle");
  const int h = static_cast<int>(src.rows());
  const int w = static_cast<int>(src.cols());
  const auto [s, c] = sincos_degrees(degrees);
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  constexpr double kEdgeTol = 1e-9;
  Plane<Scalar> dst(h, w);
  for (int y = 0; y < h; ++y) {
    const double dy = y - cy;
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      // Inverse of the displayed counter-clockwise rotation.
      double sx = cx + dx * c - dy * s;
      double sy = cy + dx * s + dy * c;
      if (sx < -kEdgeTol || sy < -kEdgeTol || sx > w - 1 + kEdgeTol || sy > h - 1 + kEdgeTol) {
        dst(y, x) = fill;
        continue;
      }
      sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
      sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
      const int x0 = static_cast<int>(sx);
      const int y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double wx = sx - x0;
      const double wy = sy - y0;
      const double top = (1 - wx) * src(y0, x0) + wx * src(y0, x1);
      const double bot = (1 - wx) * src(y1, x0) + wx * src(y1, x1);
      const double v = (1 - wy) * top + wy * bot;
      if constexpr (std::is_integral_v<Scalar>)
        dst(y, x) = static_cast<Scalar>(std::clamp(std::round(v), 0.0, 255.0));
      else
        dst(y, x) = static_cast<Scalar>(v);
    }
  }
  return dst;
}

/// Rotates counter-clockwise by `degrees`. fill_black keeps the canvas and
/// blackens uncovered corners; center_crop returns the fill-free centre
/// rectangle (throws DegenerateCrop below 16x16).
template <typename Scalar>
Image<Scalar> rotate_image(const Image<Scalar>& img, double degrees, FillPolicy policy) {
  std::vector<Plane<Scalar>> planes;
  for (int c = 0; c < img.channels(); ++c) planes.push_back(rotate_plane(img.plane(c), degrees));
  Image<Scalar> rotated(std::move(planes));
  if (policy == FillPolicy::fill_black) return rotated;
  const CropRect r = fill_free_rect(img.height(), img.width(), degrees);
  if (r.width < 16 || r.height < 16)
    throw DegenerateCrop("rotate_image: fill-free crop is " + std::to_string(r.width) + "x" +
                         std::to_string(r.height) + ", below 16x16");
  return crop(rotated, r);
}

}  // namespace oad
