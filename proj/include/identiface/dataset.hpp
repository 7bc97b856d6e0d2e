#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "identiface/image.hpp"
#include "identiface/tensor.hpp"

namespace identiface {

enum class Task { recognition, gender, face_shape, emotion };

std::string_view task_name(Task task);
std::optional<Task> try_parse_task(std::string_view name);
Task parse_task(std::string_view name);  // throws ConfigError

/// Reference label orders: gender female=0/male=1; face shape
/// oblong, square, round, heart, oval; emotion neutral, happy, angry,
/// surprise, sad. Recognition has no fixed order (enrolled names + "Other").
const std::vector<std::string>& canonical_labels(Task task);

inline constexpr std::string_view kOtherClass = "Other";

struct ManifestEntry {
  std::string path;
  int label = 0;
  std::string subject_id;
  std::optional<std::string> landmarks_path;

  bool operator==(const ManifestEntry&) const = default;
};

/// Labeled image list. Text form:
///
///   # task=face_shape
///   # classes=oblong,square,round,heart,oval
///   # split_seed=7
///   path,label,subject_id[,landmarks_path]
///
/// Header lines start with '#'. Labels in rows are class names. Relative
/// paths resolve against the manifest's directory.
struct DatasetManifest {
  Task task = Task::recognition;
  std::vector<std::string> classes;
  std::vector<ManifestEntry> entries;
  std::uint64_t split_seed = 0;
  std::filesystem::path base_dir;

  std::vector<std::size_t> class_counts() const;
  std::filesystem::path resolve(const std::string& path) const;
};

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string format_manifest(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Throws ParseError when labels, class names, or task constraints are violated.
void validate_manifest(const DatasetManifest& manifest);

/// "class  count" table, one row per class in label order.
std::string format_class_counts(const DatasetManifest& manifest);

struct ImageSample {
  Image image;
  int label = 0;
  std::string subject_id;
  std::string source_path;
};

ImageSample load_sample(const DatasetManifest& manifest, const ManifestEntry& entry);

enum class ColorMode { grayscale, rgb };

struct PreprocessSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  ColorMode color = ColorMode::grayscale;
  bool normalize = false;
  std::vector<double> mean{0.0};  // per channel, applied after scaling to [0,1]
  std::vector<double> stddev{1.0};

  std::size_t channels() const { return color == ColorMode::grayscale ? 1 : 3; }
  bool operator==(const PreprocessSpec&) const = default;
};

void validate_preprocess(const PreprocessSpec& spec);

/// 48x48 grayscale for emotion, 64x64 grayscale otherwise.
PreprocessSpec default_preprocess(Task task);

/// Color conversion, bilinear resize, scaling to [0,1] and optional
/// per-channel standardization. Returns a (C, H, W) tensor.
Tensor preprocess(const Image& image, const PreprocessSpec& spec);

struct SplitPolicy {
  enum class Kind { random_stratified, subject_disjoint };
  Kind kind = Kind::random_stratified;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  static SplitPolicy random_stratified(double test_size, std::uint64_t seed) {
    return {Kind::random_stratified, test_size, seed};
  }
  static SplitPolicy subject_disjoint(double test_fraction, std::uint64_t seed) {
    return {Kind::subject_disjoint, test_fraction, seed};
  }
};

struct SplitResult {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
};

/// Deterministic partition of the manifest entries.
SplitResult split(const DatasetManifest& manifest, const SplitPolicy& policy);

struct LabeledTensors {
  Tensor inputs;  // [N, C, H, W]
  std::vector<int> labels;

  std::size_t count() const { return labels.size(); }
};

/// Decodes and preprocesses entries (in parallel) into one batch tensor.
LabeledTensors load_tensors(const DatasetManifest& manifest, std::span<const ManifestEntry> entries,
                            const PreprocessSpec& spec);

/// Copies the listed rows of a batch into a new batch.
LabeledTensors gather(const LabeledTensors& data, std::span<const std::size_t> rows);

}  // namespace identiface
