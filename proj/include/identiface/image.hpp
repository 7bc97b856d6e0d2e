#pragma once

#include <cstddef>
#include <vector>

namespace identiface {

/// Interleaved (row, col, channel) pixel array. Values live on the 8-bit
/// scale [0, 255] but are stored as doubles so geometric transforms can
/// be chained without requantizing.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;  // 1 = grayscale, 3 = RGB
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, double fill = 0.0)
      : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

  double& at(std::size_t row, std::size_t col, std::size_t ch = 0) {
    return pixels[(row * width + col) * channels + ch];
  }
  double at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return pixels[(row * width + col) * channels + ch];
  }

  bool operator==(const Image&) const = default;
};

/// Luma conversion 0.299 R + 0.587 G + 0.114 B. Grayscale input is copied.
Image to_grayscale(const Image& image);

/// Expands grayscale to three identical planes. RGB input is copied.
Image to_rgb(const Image& image);

/// Bilinear resize with corner-aligned sampling: output corners map exactly
/// onto input corners.
Image resize_bilinear(const Image& image, std::size_t out_height, std::size_t out_width);

/// Bilinear sample at fractional (row, col) with edge replication.
double sample_bilinear_clamped(const Image& image, double row, double col, std::size_t ch);

/// Rounds to the nearest integer and clamps into [0, 255].
Image quantize(const Image& image);

}  // namespace identiface
