#pragma once

#include <filesystem>

#include "field.hpp"

namespace uhrnet {

/// 8-bit grayscale PNG. Values are mapped to [0,1] on read and quantized with
/// round-half-up on write.
void write_gray_png(const std::filesystem::path& path, const Field& image);
void write_gray_png(const std::filesystem::path& path, const DField& image);
Field read_gray_png(const std::filesystem::path& path);

/// Binary mask as 0/255 grayscale PNG.
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_png(const std::filesystem::path& path);

/// Raw 8-bit grayscale PNG, one byte per pixel.
void write_byte_png(const std::filesystem::path& path, const BasicField<uint8_t>& image);

/// Grayscale PFM: "Pf" header, little-endian (scale -1.0), scanlines stored
/// bottom-up. Round trips are bit-exact for every finite 32-bit float.
void write_pfm(const std::filesystem::path& path, const Field& image);
Field read_pfm(const std::filesystem::path& path);

}  // namespace uhrnet
