#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "identiface/dataset.hpp"
#include "identiface/image.hpp"

namespace identiface {

/// Mirror left-right.
Image hflip(const Image& image);

/// Rotation about the image center; positive degrees turn the content
/// counterclockwise ("left"). Bilinear sampling with edge replication,
/// output dims unchanged. |degrees| must be <= 45.
Image rotate(const Image& image, double degrees);

struct Transform {
  bool flip = false;
  double degrees = 0.0;

  std::string describe() const;
  bool operator==(const Transform&) const = default;
};

/// Flip first, then rotate.
Image apply_transform(const Image& image, const Transform& transform);

/// Rotation magnitudes used per task: gender {15, 30}, face shape {5, 10},
/// recognition {10}. Every task also uses horizontal flip. Emotion data is
/// not augmented and throws PlanError.
const std::vector<double>& angle_inventory(Task task);

struct ClassPlan {
  std::size_t before_count = 0;
  std::size_t target_count = 0;
  std::size_t factor = 1;
  std::vector<Transform> variants;  // factor - 1 transforms applied to every original
};

struct AugmentationPlan {
  Task task = Task::face_shape;
  std::vector<ClassPlan> per_class;
  std::uint64_t rng_seed = 0;
};

struct AugmentationReportRow {
  std::string name;
  std::size_t before_count = 0;
  std::size_t after_count = 0;
  std::size_t factor = 1;
  bool downsampled = false;
};

struct AugmentationReport {
  std::vector<AugmentationReportRow> rows;

  /// Text table with the columns class / before / after / factor.
  std::string render() const;
};

struct BalancePlan {
  AugmentationPlan plan;
  AugmentationReport report;
};

/// factor = floor(target / before); each original keeps itself and gains
/// factor - 1 variants enumerated as: flip, rotations by ascending
/// magnitude (left before right), flip+rotation pairs in the same order,
/// then seeded jitter of up to 2 degrees around inventory angles.
BalancePlan plan_balance(Task task, std::span<const std::size_t> before_counts,
                         std::span<const std::size_t> targets, std::uint64_t seed,
                         std::span<const std::string> class_names = {});

/// Seeded uniform subset of exactly `target` entries, original order kept.
std::vector<ManifestEntry> downsample(std::span<const ManifestEntry> entries, std::size_t target,
                                      std::uint64_t seed);

struct AugmentResult {
  DatasetManifest manifest;
  AugmentationReport report;
};

/// Balances a manifest: classes above their target are downsampled, classes
/// at or below it are augmented; classes without a target pass through.
/// Images (originals and variants) are written into out_dir as PNG
/// (grayscale sources as PGM) beside a regenerated manifest.csv.
AugmentResult augment_manifest(const DatasetManifest& manifest,
                               std::span<const std::optional<std::size_t>> targets,
                               std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace identiface
