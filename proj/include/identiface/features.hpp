#pragma once

#include <array>
#include <filesystem>
#include <string_view>
#include <vector>

#include "identiface/image.hpp"

namespace identiface {

enum class FeatureFamily { face_raw, landmarks_68, lbp, gabor };

std::string_view family_name(FeatureFamily family);
FeatureFamily parse_family(std::string_view name);
std::size_t family_dim(FeatureFamily family);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// 68 facial landmarks in the dlib ordering (36-41 right eye, 42-47 left eye).
struct LandmarkSet {
  std::array<Point2, 68> points{};
};

/// Reads "index x y" lines (68 of them, 0-based indices, any order).
LandmarkSet load_landmarks(const std::filesystem::path& path);
LandmarkSet parse_landmarks(std::string_view text);

struct FeatureVector {
  FeatureFamily family = FeatureFamily::face_raw;
  std::vector<double> values;
};

/// 48x48 grayscale crop flattened row-major and scaled to [0,1].
FeatureVector face_raw_features(const Image& image);

/// Landmarks centred on their centroid and divided by the inter-ocular
/// distance, flattened as (x0, y0, ..., x67, y67).
FeatureVector landmark_features(const LandmarkSet& landmarks);

/// Uniform LBP(8,1) histogram: 58 uniform-pattern bins plus one bin for all
/// non-uniform codes, L1-normalized.
FeatureVector lbp_features(const Image& image);

/// Raw LBP code of an interior pixel. Bit b is set when neighbour b is
/// >= the centre; neighbours run clockwise from the top-left.
unsigned lbp_code(const Image& image, std::size_t row, std::size_t col);

/// Histogram bin of an 8-bit LBP code (0..57 uniform, 58 otherwise).
std::size_t lbp_bin(unsigned code);

/// 5 wavelengths x 8 orientations; each response reduced to the mean and
/// standard deviation of its magnitude. 48x48 grayscale input.
FeatureVector gabor_features(const Image& image);

/// Zero-mean real Gabor kernel, sigma = 0.56 lambda, aspect 0.5.
struct GaborKernel {
  std::size_t radius = 0;
  std::vector<double> taps;  // (2r+1)^2 row-major
};
GaborKernel make_gabor_kernel(double wavelength, double theta);

/// Correlation of a grayscale image with a kernel, edge-replicated borders.
std::vector<double> gabor_response(const Image& image, const GaborKernel& kernel);

const std::array<double, 5>& gabor_wavelengths();

}  // namespace identiface
