#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oad/errors.hpp"

namespace oad {

template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Planar multi-channel image: one row-major Eigen array (rows = height) per
/// channel.
template <typename Scalar>
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, Scalar fill = Scalar(0))
      : planes_(channels, Plane<Scalar>::Constant(height, width, fill)) {
    if (height < 0 || width < 0 || channels < 1)
      throw InvalidArgument("Image: bad dimensions");
  }
  explicit Image(std::vector<Plane<Scalar>> planes) : planes_(std::move(planes)) {
    if (planes_.empty()) throw InvalidArgument("Image: no channels");
    for (const auto& p : planes_)
      if (p.rows() != planes_[0].rows() || p.cols() != planes_[0].cols())
        throw InvalidArgument("Image: channel planes differ in size");
  }

  int height() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].rows()); }
  int width() const { return planes_.empty() ? 0 : static_cast<int>(planes_[0].cols()); }
  int channels() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return height() == 0 || width() == 0; }

  Plane<Scalar>& plane(int c) { return planes_[c]; }
  const Plane<Scalar>& plane(int c) const { return planes_[c]; }

  Scalar& operator()(int y, int x, int c) { return planes_[c](y, x); }
  Scalar operator()(int y, int x, int c) const { return planes_[c](y, x); }

  template <typename Other>
  Image<Other> cast() const {
    std::vector<Plane<Other>> out;
    out.reserve(planes_.size());
    for (const auto& p : planes_) out.push_back(p.template cast<Other>());
    return Image<Other>(std::move(out));
  }

  friend bool operator==(const Image& a, const Image& b) {
    if (a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width())
      return false;
    for (int c = 0; c < a.channels(); ++c)
      if (!(a.planes_[c] == b.planes_[c]).all()) return false;
    return true;
  }

 private:
  std::vector<Plane<Scalar>> planes_;
};

using ImageU8 = Image<std::uint8_t>;
using ImageF = Image<float>;

/// Rounds and clamps a floating image into 8-bit channels.
template <typename Scalar>
ImageU8 to_u8(const Image<Scalar>& img) {
  std::vector<Plane<std::uint8_t>> out;
  for (int c = 0; c < img.channels(); ++c)
    out.push_back(img.plane(c).round().max(Scalar(0)).min(Scalar(255)).template cast<std::uint8_t>());
  return ImageU8(std::move(out));
}

/// Rec. 601 luma in the input's intensity scale.
template <typename Scalar, typename Out = double>
Plane<Out> to_gray(const Image<Scalar>& img) {
  if (img.channels() == 1) return img.plane(0).template cast<Out>();
  if (img.channels() < 3) throw InvalidArgument("to_gray: expected 1 or 3+ channels");
  return Out(0.299) * img.plane(0).template cast<Out>() +
         Out(0.587) * img.plane(1).template cast<Out>() +
         Out(0.114) * img.plane(2).template cast<Out>();
}

/// Bilinear resize mapping pixel centres onto pixel centres.
template <typename Scalar>
Plane<Scalar> resize_bilinear(const Plane<Scalar>& src, int height, int width) {
  Plane<Scalar> dst(height, width);
  const double sy = static_cast<double>(src.rows()) / height;
  const double sx = static_cast<double>(src.cols()) / width;
  const int maxy = static_cast<int>(src.rows()) - 1;
  const int maxx = static_cast<int>(src.cols()) - 1;
  for (int y = 0; y < height; ++y) {
    double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(maxy));
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, maxy);
    double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(maxx));
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, maxx);
      double wx = fx - x0;
      double top = (1 - wx) * src(y0, x0) + wx * src(y0, x1);
      double bot = (1 - wx) * src(y1, x0) + wx * src(y1, x1);
      dst(y, x) = static_cast<Scalar>((1 - wy) * top + wy * bot);
    }
  }
  return dst;
}

}  // namespace oad
