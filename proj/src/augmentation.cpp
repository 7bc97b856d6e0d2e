#include "identiface/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "identiface/error.hpp"
#include "identiface/image_io.hpp"
#include "identiface/rng.hpp"

namespace identiface {

Image hflip(const Image& image) {
  Image out = image;
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      for (std::size_t ch = 0; ch < image.channels; ++ch) {
        out.at(r, c, ch) = image.at(r, image.width - 1 - c, ch);
      }
    }
  }
  return out;
}

Image rotate(const Image& image, double degrees) {
  if (!(std::abs(degrees) <= 45.0)) {
    throw RangeError("rotation of " + std::to_string(degrees) + " degrees exceeds +/-45");
  }
  if (degrees == 0.0) return image;
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double cy = static_cast<double>(image.height - 1) / 2.0;
  const double cx = static_cast<double>(image.width - 1) / 2.0;
  Image out(image.width, image.height, image.channels);
  for (std::size_t r = 0; r < image.height; ++r) {
    const double dy = static_cast<double>(r) - cy;
    for (std::size_t c = 0; c < image.width; ++c) {
      const double dx = static_cast<double>(c) - cx;
      const double src_x = cx + cos_t * dx - sin_t * dy;
      const double src_y = cy + sin_t * dx + cos_t * dy;
      for (std::size_t ch = 0; ch < image.channels; ++ch) {
        out.at(r, c, ch) = sample_bilinear_clamped(image, src_y, src_x, ch);
      }
    }
  }
  return out;
}

std::string Transform::describe() const {
  std::ostringstream out;
  if (flip) out << "hflip";
  if (degrees != 0.0) {
    if (flip) out << "+";
    out << "rot(" << std::fixed << std::setprecision(2) << degrees << ")";
  }
  if (!flip && degrees == 0.0) out << "identity";
  return out.str();
}

Image apply_transform(const Image& image, const Transform& transform) {
  return rotate(transform.flip ? hflip(image) : image, transform.degrees);
}

const std::vector<double>& angle_inventory(Task task) {
  static const std::vector<double> gender{15.0, 30.0};
  static const std::vector<double> face_shape{5.0, 10.0};
  static const std::vector<double> recognition{10.0};
  switch (task) {
    case Task::gender: return gender;
    case Task::face_shape: return face_shape;
    case Task::recognition: return recognition;
    case Task::emotion: break;
  }
  throw PlanError("no augmentation inventory for task '" + std::string(task_name(task)) + "'");
}

namespace {

std::vector<Transform> enumerate_variants(Task task, std::size_t count, Rng& rng) {
  const auto& angles = angle_inventory(task);
  std::vector<Transform> fixed{{true, 0.0}};
  std::vector<Transform> rotations;
  for (bool flip : {false, true}) {
    for (double a : angles) {
      rotations.push_back({flip, a});
      rotations.push_back({flip, -a});
    }
  }
  fixed.insert(fixed.end(), rotations.begin(), rotations.end());

  std::vector<Transform> out;
  for (std::size_t i = 0; i < count && i < fixed.size(); ++i) out.push_back(fixed[i]);
  for (std::size_t k = 0; out.size() < count; ++k) {
    Transform t = rotations[k % rotations.size()];
    t.degrees += rng.uniform(-2.0, 2.0);
    out.push_back(t);
  }
  return out;
}

}  // namespace

std::string AugmentationReport::render() const {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "class" << std::right
      << std::setw(10) << "before" << std::setw(10) << "after" << std::setw(10) << "factor"
      << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.name << std::right
        << std::setw(10) << r.before_count << std::setw(10) << r.after_count;
    if (r.downsampled) {
      out << std::setw(10) << "down";
    } else {
      out << std::setw(10) << r.factor;
    }
    out << '\n';
  }
  return out.str();
}

BalancePlan plan_balance(Task task, std::span<const std::size_t> before_counts,
                         std::span<const std::size_t> targets, std::uint64_t seed,
                         std::span<const std::string> class_names) {
  if (before_counts.size() != targets.size()) {
    throw PlanError("plan_balance: counts and targets differ in length");
  }
  BalancePlan result;
  result.plan.task = task;
  result.plan.rng_seed = seed;
  for (std::size_t k = 0; k < before_counts.size(); ++k) {
    const std::string name =
        k < class_names.size() ? class_names[k] : "class " + std::to_string(k);
    const std::size_t before = before_counts[k];
    const std::size_t target = targets[k];
    if (before == 0) throw PlanError("class '" + name + "' has no images to augment");
    if (target < before) {
      throw PlanError("class '" + name + "' target " + std::to_string(target) +
                      " is below its count " + std::to_string(before) + "; downsample instead");
    }
    ClassPlan cp;
    cp.before_count = before;
    cp.target_count = target;
    cp.factor = target / before;
    Rng rng(derive_seed(seed, k));
    if (cp.factor > 1) cp.variants = enumerate_variants(task, cp.factor - 1, rng);
    result.report.rows.push_back({name, before, before * cp.factor, cp.factor, false});
    result.plan.per_class.push_back(std::move(cp));
  }
  return result;
}

std::vector<ManifestEntry> downsample(std::span<const ManifestEntry> entries, std::size_t target,
                                      std::uint64_t seed) {
  if (target > entries.size()) {
    throw RangeError("cannot downsample " + std::to_string(entries.size()) + " entries to " +
                     std::to_string(target));
  }
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(target);
  std::sort(order.begin(), order.end());
  std::vector<ManifestEntry> out;
  out.reserve(target);
  for (std::size_t i : order) out.push_back(entries[i]);
  return out;
}

AugmentResult augment_manifest(const DatasetManifest& manifest,
                               std::span<const std::optional<std::size_t>> targets,
                               std::uint64_t seed, const std::filesystem::path& out_dir) {
  const std::size_t k = manifest.classes.size();
  if (targets.size() != k) throw PlanError("one optional target per class required");
  std::filesystem::create_directories(out_dir);

  std::vector<std::vector<ManifestEntry>> per_class(k);
  for (const auto& e : manifest.entries) per_class[static_cast<std::size_t>(e.label)].push_back(e);

  AugmentResult result;
  result.manifest = manifest;
  result.manifest.base_dir = out_dir;
  result.manifest.entries.clear();

  struct Job {
    ManifestEntry source;
    std::vector<Transform> variants;
  };
  std::vector<Job> jobs;

  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t before = per_class[c].size();
    if (targets[c] && *targets[c] < before) {
      auto kept = downsample(per_class[c], *targets[c], derive_seed(seed, 1000 + c));
      for (auto& e : kept) jobs.push_back({std::move(e), {}});
      result.report.rows.push_back({manifest.classes[c], before, *targets[c], 1, true});
      continue;
    }
    const std::size_t target = targets[c] ? *targets[c] : before;
    const std::size_t counts[1] = {before};
    const std::size_t goals[1] = {target};
    const std::string names[1] = {manifest.classes[c]};
    std::vector<Transform> variants;
    if (target > before) {
      auto balance = plan_balance(manifest.task, counts, goals, derive_seed(seed, c), names);
      variants = balance.plan.per_class[0].variants;
      result.report.rows.push_back(balance.report.rows[0]);
    } else {
      result.report.rows.push_back({manifest.classes[c], before, before, 1, false});
    }
    for (const auto& e : per_class[c]) jobs.push_back({e, variants});
  }

  // Output names are derived from the job index so distinct sources never collide.
  std::vector<std::vector<ManifestEntry>> written(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto n_jobs = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < n_jobs; ++j) {
    try {
      const Job& job = jobs[static_cast<std::size_t>(j)];
      const Image original = load_sample(manifest, job.source).image;
      const std::string ext = original.channels == 1 ? ".pgm" : ".png";
      const std::string stem = std::filesystem::path(job.source.path).stem().string();
      const std::string base = std::to_string(j) + "_" + stem;

      ManifestEntry kept = job.source;
      kept.path = base + ext;
      if (kept.landmarks_path) kept.landmarks_path = manifest.resolve(*kept.landmarks_path).string();
      write_image_file(original, out_dir / kept.path);
      auto& out = written[static_cast<std::size_t>(j)];
      out.push_back(kept);
      for (std::size_t v = 0; v < job.variants.size(); ++v) {
        ManifestEntry variant = job.source;
        variant.path = base + "_v" + std::to_string(v + 1) + ext;
        variant.landmarks_path.reset();  // landmarks do not follow the transform
        write_image_file(apply_transform(original, job.variants[v]), out_dir / variant.path);
        out.push_back(std::move(variant));
      }
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& group : written) {
    for (auto& e : group) result.manifest.entries.push_back(std::move(e));
  }
  save_manifest(result.manifest, out_dir / "manifest.csv");
  return result;
}

}  // namespace identiface
