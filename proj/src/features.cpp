#include "identiface/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "identiface/error.hpp"

namespace identiface {

std::string_view family_name(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::face_raw: return "face_raw";
    case FeatureFamily::landmarks_68: return "landmarks_68";
    case FeatureFamily::lbp: return "lbp";
    case FeatureFamily::gabor: return "gabor";
  }
  return "unknown";
}

FeatureFamily parse_family(std::string_view name) {
  for (auto f : {FeatureFamily::face_raw, FeatureFamily::landmarks_68, FeatureFamily::lbp,
                 FeatureFamily::gabor}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown feature family '" + std::string(name) + "'");
}

std::size_t family_dim(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::face_raw: return 48 * 48;
    case FeatureFamily::landmarks_68: return 136;
    case FeatureFamily::lbp: return 59;
    case FeatureFamily::gabor: return 80;
  }
  return 0;
}

namespace {

void require_gray_48(const Image& image, std::string_view what) {
  if (image.width != 48 || image.height != 48 || image.channels != 1) {
    throw DimensionError(std::string(what) + " expects a 48x48 grayscale image, got " +
                         std::to_string(image.width) + "x" + std::to_string(image.height) + "x" +
                         std::to_string(image.channels));
  }
}

Point2 centroid(const LandmarkSet& lm, std::size_t first, std::size_t last) {
  Point2 c;
  for (std::size_t i = first; i <= last; ++i) {
    c.x += lm.points[i].x;
    c.y += lm.points[i].y;
  }
  const double n = static_cast<double>(last - first + 1);
  return {c.x / n, c.y / n};
}

std::array<int, 256> build_uniform_table() {
  std::array<int, 256> table{};
  int next = 0;
  for (unsigned code = 0; code < 256; ++code) {
    const unsigned rotated = ((code << 1) | (code >> 7)) & 0xFFu;
    const int transitions = std::popcount(code ^ rotated);
    table[code] = transitions <= 2 ? next++ : 58;
  }
  return table;
}

}  // namespace

LandmarkSet parse_landmarks(std::string_view text) {
  LandmarkSet lm;
  std::array<bool, 68> seen{};
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t row = 0, count = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    long index = -1;
    double x = 0, y = 0;
    if (!(fields >> index >> x >> y)) {
      throw ParseError("landmark row " + std::to_string(row) + ": expected 'index x y'");
    }
    if (index < 0 || index >= 68) {
      throw ParseError("landmark row " + std::to_string(row) + ": index out of range");
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw NumericError("landmark row " + std::to_string(row) + ": non-finite coordinate");
    }
    if (seen[static_cast<std::size_t>(index)]) {
      throw ParseError("landmark row " + std::to_string(row) + ": duplicate index");
    }
    seen[static_cast<std::size_t>(index)] = true;
    lm.points[static_cast<std::size_t>(index)] = {x, y};
    ++count;
  }
  if (count != 68) throw ParseError("landmark file has " + std::to_string(count) + " points, need 68");
  return lm;
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open landmark file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_landmarks(buffer.str());
}

FeatureVector face_raw_features(const Image& image) {
  require_gray_48(image, "face_raw_features");
  FeatureVector fv{FeatureFamily::face_raw, std::vector<double>(48 * 48)};
  for (std::size_t i = 0; i < fv.values.size(); ++i) fv.values[i] = image.pixels[i] / 255.0;
  return fv;
}

FeatureVector landmark_features(const LandmarkSet& lm) {
  for (const auto& p : lm.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw NumericError("non-finite landmark");
  }
  const Point2 center = centroid(lm, 0, 67);
  const Point2 right_eye = centroid(lm, 36, 41);
  const Point2 left_eye = centroid(lm, 42, 47);
  const double iod = std::hypot(left_eye.x - right_eye.x, left_eye.y - right_eye.y);
  if (!(iod > 0.0)) throw DegeneracyError("inter-ocular distance is zero");
  FeatureVector fv{FeatureFamily::landmarks_68, std::vector<double>(136)};
  for (std::size_t i = 0; i < 68; ++i) {
    fv.values[2 * i] = (lm.points[i].x - center.x) / iod;
    fv.values[2 * i + 1] = (lm.points[i].y - center.y) / iod;
  }
  return fv;
}

unsigned lbp_code(const Image& image, std::size_t row, std::size_t col) {
  static constexpr int kOffsets[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, 1},
                                         {1, 1},   {1, 0},  {1, -1}, {0, -1}};
  const double center = image.at(row, col);
  unsigned code = 0;
  for (unsigned b = 0; b < 8; ++b) {
    const auto r = static_cast<std::size_t>(static_cast<long>(row) + kOffsets[b][0]);
    const auto c = static_cast<std::size_t>(static_cast<long>(col) + kOffsets[b][1]);
    if (image.at(r, c) >= center) code |= 1u << b;
  }
  return code;
}

std::size_t lbp_bin(unsigned code) {
  static const std::array<int, 256> table = build_uniform_table();
  return static_cast<std::size_t>(table[code & 0xFFu]);
}

FeatureVector lbp_features(const Image& input) {
  if (input.width < 3 || input.height < 3) {
    throw DimensionError("lbp_features needs at least a 3x3 image");
  }
  const Image image = to_grayscale(input);
  FeatureVector fv{FeatureFamily::lbp, std::vector<double>(59, 0.0)};
  for (std::size_t r = 1; r + 1 < image.height; ++r) {
    for (std::size_t c = 1; c + 1 < image.width; ++c) fv.values[lbp_bin(lbp_code(image, r, c))] += 1.0;
  }
  const double total = static_cast<double>((image.height - 2) * (image.width - 2));
  for (double& v : fv.values) v /= total;
  return fv;
}

const std::array<double, 5>& gabor_wavelengths() {
  static const std::array<double, 5> wavelengths{4.0, 4.0 * std::numbers::sqrt2, 8.0,
                                                 8.0 * std::numbers::sqrt2, 16.0};
  return wavelengths;
}

GaborKernel make_gabor_kernel(double wavelength, double theta) {
  const double sigma = 0.56 * wavelength;
  const double gamma = 0.5;
  GaborKernel k;
  k.radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  const auto r = static_cast<long>(k.radius);
  const std::size_t side = 2 * k.radius + 1;
  k.taps.resize(side * side);
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  double mean = 0.0;
  for (long y = -r; y <= r; ++y) {
    for (long x = -r; x <= r; ++x) {
      const double xr = x * cos_t + y * sin_t;
      const double yr = -x * sin_t + y * cos_t;
      const double v = std::exp(-(xr * xr + gamma * gamma * yr * yr) / (2.0 * sigma * sigma)) *
                       std::cos(2.0 * std::numbers::pi * xr / wavelength);
      k.taps[static_cast<std::size_t>((y + r) * static_cast<long>(side) + (x + r))] = v;
      mean += v;
    }
  }
  mean /= static_cast<double>(k.taps.size());
  for (double& v : k.taps) v -= mean;
  return k;
}

std::vector<double> gabor_response(const Image& image, const GaborKernel& kernel) {
  const auto h = static_cast<long>(image.height), w = static_cast<long>(image.width);
  const auto r = static_cast<long>(kernel.radius);
  const long side = 2 * r + 1;
  std::vector<double> out(image.width * image.height);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      double acc = 0.0;
      for (long ky = -r; ky <= r; ++ky) {
        const long sy = std::clamp(y + ky, 0L, h - 1);
        const double* tap = kernel.taps.data() + (ky + r) * side;
        const double* src = image.pixels.data() + sy * w;
        for (long kx = -r; kx <= r; ++kx) acc += tap[kx + r] * src[std::clamp(x + kx, 0L, w - 1)];
      }
      out[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  return out;
}

FeatureVector gabor_features(const Image& image) {
  require_gray_48(image, "gabor_features");
  FeatureVector fv{FeatureFamily::gabor, std::vector<double>(80, 0.0)};
  const auto& wavelengths = gabor_wavelengths();
#pragma omp parallel for schedule(dynamic)
  for (int filter = 0; filter < 40; ++filter) {
    const double lambda = wavelengths[static_cast<std::size_t>(filter / 8)];
    const double theta = (filter % 8) * std::numbers::pi / 8.0;
    const auto response = gabor_response(image, make_gabor_kernel(lambda, theta));
    double mean = 0.0;
    for (double v : response) mean += std::abs(v);
    mean /= static_cast<double>(response.size());
    double var = 0.0;
    for (double v : response) var += (std::abs(v) - mean) * (std::abs(v) - mean);
    var /= static_cast<double>(response.size());
    fv.values[static_cast<std::size_t>(2 * filter)] = mean;
    fv.values[static_cast<std::size_t>(2 * filter + 1)] = std::sqrt(var);
  }
  return fv;
}

}  // namespace identiface
