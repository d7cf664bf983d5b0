#include "oad/rotation.hpp"

namespace oad {

std::string to_string(FillPolicy policy) {
  return policy == FillPolicy::fill_black ? "fill_black" : "center_crop";
}

FillPolicy parse_fill_policy(const std::string& text) {
  if (text == "fill_black") return FillPolicy::fill_black;
  if (text == "center_crop") return FillPolicy::center_crop;
  throw InvalidArgument("unknown fill policy '" + text + "'");
}

CropRect fill_free_rect(int height, int width, double degrees) {
  if (height < 1 || width < 1) throw InvalidArgument("fill_free_rect: empty canvas");
  const auto [s, c] = sincos_degrees(degrees);
  const double as = std::abs(s);
  const double ac = std::abs(c);
  // Work in pixel-centre extents so every kept centre samples inside the source.
  const double ew = width - 1;
  const double eh = height - 1;
  double scale = 1.0;
  if (ew > 0 && eh > 0) {
    scale = std::min(ew / (ew * ac + eh * as), eh / (ew * as + eh * ac));
  }
  scale = std::min(scale, 1.0);
  int cw = static_cast<int>(std::floor(scale * ew + 1e-9)) + 1;
  int ch = static_cast<int>(std::floor(scale * eh + 1e-9)) + 1;
  // Same parity as the canvas keeps the rectangle exactly centred.
  if ((width - cw) % 2 != 0) --cw;
  if ((height - ch) % 2 != 0) --ch;
  cw = std::max(cw, 0);
  ch = std::max(ch, 0);
  return CropRect{(width - cw) / 2, (height - ch) / 2, cw, ch};
}

}  // namespace oad
