#include "identiface/image.hpp"

#include <algorithm>
#include <cmath>

#include "identiface/error.hpp"

namespace identiface {

Image to_grayscale(const Image& image) {
  if (image.channels == 1) return image;
  Image out(image.width, image.height, 1);
  for (std::size_t i = 0; i < image.width * image.height; ++i) {
    const double* px = image.pixels.data() + i * image.channels;
    out.pixels[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return out;
}

Image to_rgb(const Image& image) {
  if (image.channels == 3) return image;
  Image out(image.width, image.height, 3);
  for (std::size_t i = 0; i < image.width * image.height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) out.pixels[i * 3 + c] = image.pixels[i];
  }
  return out;
}

double sample_bilinear_clamped(const Image& image, double row, double col, std::size_t ch) {
  const double max_row = static_cast<double>(image.height - 1);
  const double max_col = static_cast<double>(image.width - 1);
  row = std::clamp(row, 0.0, max_row);
  col = std::clamp(col, 0.0, max_col);
  const auto r0 = static_cast<std::size_t>(std::floor(row));
  const auto c0 = static_cast<std::size_t>(std::floor(col));
  const std::size_t r1 = std::min(r0 + 1, image.height - 1);
  const std::size_t c1 = std::min(c0 + 1, image.width - 1);
  const double fr = row - static_cast<double>(r0);
  const double fc = col - static_cast<double>(c0);
  const double top = image.at(r0, c0, ch) * (1.0 - fc) + image.at(r0, c1, ch) * fc;
  const double bottom = image.at(r1, c0, ch) * (1.0 - fc) + image.at(r1, c1, ch) * fc;
  return top * (1.0 - fr) + bottom * fr;
}

Image resize_bilinear(const Image& image, std::size_t out_height, std::size_t out_width) {
  if (image.width == 0 || image.height == 0) {
    throw DimensionError("cannot resize an image with zero width or height");
  }
  if (out_width == 0 || out_height == 0) throw DimensionError("resize target must be positive");
  if (out_width == image.width && out_height == image.height) return image;

  const double row_scale =
      out_height > 1 ? static_cast<double>(image.height - 1) / static_cast<double>(out_height - 1)
                     : 0.0;
  const double col_scale =
      out_width > 1 ? static_cast<double>(image.width - 1) / static_cast<double>(out_width - 1)
                    : 0.0;
  Image out(out_width, out_height, image.channels);
  for (std::size_t r = 0; r < out_height; ++r) {
    const double src_r = out_height > 1 ? static_cast<double>(r) * row_scale
                                        : static_cast<double>(image.height - 1) / 2.0;
    for (std::size_t c = 0; c < out_width; ++c) {
      const double src_c = out_width > 1 ? static_cast<double>(c) * col_scale
                                         : static_cast<double>(image.width - 1) / 2.0;
      for (std::size_t ch = 0; ch < image.channels; ++ch) {
        out.at(r, c, ch) = sample_bilinear_clamped(image, src_r, src_c, ch);
      }
    }
  }
  return out;
}

Image quantize(const Image& image) {
  Image out = image;
  for (double& v : out.pixels) v = std::clamp(std::round(v), 0.0, 255.0);
  return out;
}

}  // namespace identiface
