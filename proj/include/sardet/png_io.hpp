#pragma once

#include <filesystem>

#include "sardet/composites.hpp"

namespace sardet {

/// Lossless 8-bit RGB PNG round trip. load_png rejects anything that is not
/// plain 8-bit RGB (palette, grayscale, alpha, 16-bit) and malformed or
/// truncated files with a ValidationError; open failures raise IoError.
void save_png(const RGBImage& img, const std::filesystem::path& path);
RGBImage load_png(const std::filesystem::path& path);

} // namespace sardet
