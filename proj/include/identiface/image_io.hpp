#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "identiface/image.hpp"

namespace identiface {

/// Decodes binary PGM (P5, maxval 255), binary PPM (P6, maxval 255) or
/// 8-bit non-interlaced PNG. PGM yields grayscale; PPM and PNG yield RGB.
/// Throws FormatError for anything else.
Image decode_image(std::span<const std::uint8_t> bytes);
Image decode_image_file(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_pgm(const Image& image);
std::vector<std::uint8_t> encode_ppm(const Image& image);
std::vector<std::uint8_t> encode_png(const Image& image);

/// Quantizes and writes by extension: .pgm (grayscale), .ppm or .png.
void write_image_file(const Image& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace identiface
