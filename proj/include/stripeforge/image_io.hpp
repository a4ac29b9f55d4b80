#pragma once

#include <filesystem>

#include "stripeforge/image.hpp"
#include "stripeforge/render.hpp"

namespace stripeforge {

/// Byte b maps to b/255; doubles map back by round(v*255) after clamping.
std::uint8_t to_byte(double v);
double from_byte(std::uint8_t b);

/// Binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

/// Scene triplet as <stem>_amb.ppm, <stem>_full.ppm (att derived on load).
void write_scene_ppm(const std::filesystem::path& stem, const RadiometricScene& scene);
RadiometricScene read_scene_ppm(const std::filesystem::path& stem);

/// Single-file scene: "RSEIMG1\0", u32 rows, u32 cols (little-endian),
/// followed by the amb, full and att planes as rows*cols*3 bytes each.
void write_scene_bin(const std::filesystem::path& path, const RadiometricScene& scene);
RadiometricScene read_scene_bin(const std::filesystem::path& path);

}  // namespace stripeforge
