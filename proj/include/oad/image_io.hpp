#pragma once

#include <filesystem>

#include "oad/image.hpp"

namespace oad {

/// Reads a PNG or JPEG file (detected from its signature) as 8-bit RGB.
ImageU8 read_image(const std::filesystem::path& path);

/// Writes by extension: .png, .jpg/.jpeg. Grayscale images are written as one
/// channel, everything else as RGB.
void write_image(const std::filesystem::path& path, const ImageU8& img, int jpeg_quality = 95);

void write_png(const std::filesystem::path& path, const ImageU8& img);
void write_jpeg(const std::filesystem::path& path, const ImageU8& img, int quality = 95);

}  // namespace oad
