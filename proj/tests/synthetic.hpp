#pragma once

// Synthetic image sets with class-specific textures.

#include <cmath>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "identiface/dataset.hpp"
#include "identiface/image_io.hpp"
#include "identiface/rng.hpp"

namespace synthetic {

/// Class 0: horizontal stripes, 1: vertical stripes, 2: checkerboard,
/// 3: concentric rings. Phase, period and noise vary per sample.
inline identiface::Image texture(int cls, std::size_t size, identiface::Rng& rng) {
  identiface::Image img(size, size, 1);
  const double period = rng.uniform(5.0, 8.0);
  const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
  const double centre = static_cast<double>(size) / 2 + rng.uniform(-2, 2);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) {
      const double x = static_cast<double>(c), y = static_cast<double>(r);
      double v = 0;
      switch (cls) {
        case 0: v = std::sin(2 * std::numbers::pi * y / period + phase); break;
        case 1: v = std::sin(2 * std::numbers::pi * x / period + phase); break;
        case 2:
          v = std::sin(2 * std::numbers::pi * x / period + phase) *
              std::sin(2 * std::numbers::pi * y / period + phase);
          v = v > 0 ? 1 : -1;
          break;
        default:
          v = std::sin(2 * std::numbers::pi * std::hypot(x - centre, y - centre) / period + phase);
      }
      img.at(r, c) = std::clamp(128.0 + 90.0 * v + rng.uniform(-20, 20), 0.0, 255.0);
    }
  return identiface::quantize(img);
}

inline identiface::LabeledTensors tensors(std::size_t classes, std::size_t per_class, std::size_t size,
                                          std::uint64_t seed) {
  identiface::Rng rng(seed);
  identiface::LabeledTensors out;
  out.inputs = identiface::Tensor({classes * per_class, 1, size, size});
  std::size_t n = 0;
  for (std::size_t i = 0; i < per_class; ++i)
    for (std::size_t k = 0; k < classes; ++k, ++n) {
      const auto img = texture(static_cast<int>(k), size, rng);
      for (std::size_t p = 0; p < size * size; ++p) out.inputs[n * size * size + p] = img.pixels[p] / 255.0;
      out.labels.push_back(static_cast<int>(k));
    }
  return out;
}

/// Writes PGM files plus manifest.csv into dir; returns the manifest path.
inline std::filesystem::path write_dataset(const std::filesystem::path& dir, identiface::Task task,
                                           const std::vector<std::string>& classes,
                                           std::size_t per_class, std::size_t size,
                                           std::uint64_t seed) {
  std::filesystem::create_directories(dir / "img");
  identiface::Rng rng(seed);
  std::string text = "# task=" + std::string(identiface::task_name(task)) + "\n# classes=";
  for (std::size_t k = 0; k < classes.size(); ++k) text += (k ? "," : "") + classes[k];
  text += "\n# split_seed=" + std::to_string(seed) + "\n";
  for (std::size_t k = 0; k < classes.size(); ++k)
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::string name = "img/" + classes[k] + "_" + std::to_string(i) + ".pgm";
      identiface::write_image_file(texture(static_cast<int>(k), size, rng), dir / name);
      text += name + "," + classes[k] + ",s" + std::to_string(k) + "_" + std::to_string(i) + "\n";
    }
  const auto path = dir / "manifest.csv";
  std::ofstream(path) << text;
  return path;
}

}  // namespace synthetic
