#pragma once

#include <string>

#include "unca/image.hpp"

namespace unca {

// 8-bit PNG reader. Supports non-interlaced grayscale, gray+alpha, RGB,
// RGBA and palette images; always returns a 3-channel image in [0,1]
// (gray replicated, alpha dropped). Throws std::runtime_error on malformed
// or unsupported files.
Image read_png(const std::string& path);

// Writes 8-bit RGB PNG (values clamped to [0,1], scaled by 255).
void write_png(const Image& img, const std::string& path);

// Binary PPM (P6). maxval 255 or 65535; 16-bit samples are big-endian per
// Netpbm convention. The emitted C generators write 16-bit P6.
Image read_ppm(const std::string& path);
void write_ppm(const Image& img, const std::string& path, int maxval = 255);

}  // namespace unca
