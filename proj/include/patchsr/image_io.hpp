#pragma once

#include "patchsr/image.hpp"

#include <filesystem>

namespace patchsr {

/// Binary PGM (P5). Samples are divided by maxval, so intensities land in
/// [0, 1]. maxval > 255 means 16-bit big-endian samples.
Image read_pgm(const std::filesystem::path& path);

/// Intensities are clamped to [0, 1] and rounded to the nearest level of
/// 2^bits - 1. bits must be 8 or 16.
void write_pgm(const Image& img, const std::filesystem::path& path, int bits = 8);

/// "IMGF <rows> <cols>\n" followed by rows*cols little-endian float64 in
/// row-major order. Lossless.
Image read_imgf(const std::filesystem::path& path);
void write_imgf(const Image& img, const std::filesystem::path& path);

/// Dispatches on the file magic (P5 or IMGF).
Image read_image(const std::filesystem::path& path);

/// PGM for a ".pgm" extension (8-bit), IMGF otherwise.
void write_image(const Image& img, const std::filesystem::path& path);

}  // namespace patchsr
