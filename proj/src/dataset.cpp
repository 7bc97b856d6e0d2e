#include "identiface/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "identiface/error.hpp"
#include "identiface/image_io.hpp"
#include "identiface/rng.hpp"

namespace identiface {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                      : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool is_prefix_of(const std::vector<std::string>& prefix, const std::vector<std::string>& full) {
  return prefix.size() <= full.size() && std::equal(prefix.begin(), prefix.end(), full.begin());
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::recognition: return "recognition";
    case Task::gender: return "gender";
    case Task::face_shape: return "face_shape";
    case Task::emotion: return "emotion";
  }
  return "unknown";
}

std::optional<Task> try_parse_task(std::string_view name) {
  for (Task t : {Task::recognition, Task::gender, Task::face_shape, Task::emotion}) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

Task parse_task(std::string_view name) {
  if (auto t = try_parse_task(name)) return *t;
  throw ConfigError("unknown task '" + std::string(name) +
                    "' (expected recognition, gender, face_shape or emotion)");
}

const std::vector<std::string>& canonical_labels(Task task) {
  static const std::vector<std::string> gender{"female", "male"};
  static const std::vector<std::string> face_shape{"oblong", "square", "round", "heart", "oval"};
  static const std::vector<std::string> emotion{"neutral", "happy", "angry", "surprise", "sad"};
  static const std::vector<std::string> none;
  switch (task) {
    case Task::gender: return gender;
    case Task::face_shape: return face_shape;
    case Task::emotion: return emotion;
    case Task::recognition: return none;
  }
  return none;
}

std::vector<std::size_t> DatasetManifest::class_counts() const {
  std::vector<std::size_t> counts(classes.size(), 0);
  for (const auto& e : entries) {
    if (e.label >= 0 && static_cast<std::size_t>(e.label) < counts.size()) ++counts[e.label];
  }
  return counts;
}

std::filesystem::path DatasetManifest::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

void validate_manifest(const DatasetManifest& m) {
  if (m.classes.empty()) throw ParseError("manifest declares no classes");
  std::set<std::string> names;
  for (const auto& c : m.classes) {
    if (c.empty()) throw ParseError("manifest has an empty class name");
    if (!names.insert(c).second) throw ParseError("duplicate class name '" + c + "'");
  }
  const auto& canon = canonical_labels(m.task);
  switch (m.task) {
    case Task::recognition:
      if (!names.count(std::string(kOtherClass))) {
        throw ParseError("recognition manifest must include an \"Other\" class");
      }
      break;
    case Task::gender:
      if (m.classes != canon) throw ParseError("gender classes must be exactly female,male");
      break;
    case Task::face_shape:
      if (!is_prefix_of(m.classes, canon) || (m.classes.size() != 3 && m.classes.size() != 5)) {
        throw ParseError("face_shape classes must be oblong,square,round[,heart,oval]");
      }
      break;
    case Task::emotion: {
      // The reference label order binds whenever only reference names are used;
      // other emotion subsets (e.g. 7-class or fear/angry/happy) are free-form.
      const bool all_canonical = std::all_of(m.classes.begin(), m.classes.end(), [&](auto& c) {
        return std::find(canon.begin(), canon.end(), c) != canon.end();
      });
      if (all_canonical &&
          (!is_prefix_of(m.classes, canon) || (m.classes.size() != 4 && m.classes.size() != 5))) {
        throw ParseError("emotion classes must be neutral,happy,angry,surprise[,sad]");
      }
      break;
    }
  }
  std::set<std::string> paths;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    if (e.label < 0 || static_cast<std::size_t>(e.label) >= m.classes.size()) {
      throw ParseError("entry " + std::to_string(i) + " has invalid label " +
                       std::to_string(e.label));
    }
    if (!paths.insert(e.path).second) throw ParseError("duplicate path '" + e.path + "'");
  }
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir;
  bool have_task = false;
  bool have_classes = false;
  std::map<std::string, int> label_of;
  std::set<std::string> seen_paths;

  std::size_t row = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const std::string line =
        trim(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++row;
    const std::string where = "manifest row " + std::to_string(row) + ": ";
    if (line.empty()) continue;

    if (line[0] == '#') {
      const std::string body = trim(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;  // free comment
      const std::string key = trim(std::string_view(body).substr(0, eq));
      const std::string value = trim(std::string_view(body).substr(eq + 1));
      if (key == "task") {
        auto t = try_parse_task(value);
        if (!t) throw ParseError(where + "unknown task '" + value + "'");
        m.task = *t;
        have_task = true;
      } else if (key == "classes") {
        m.classes = split_on(value, ',');
        label_of.clear();
        for (std::size_t i = 0; i < m.classes.size(); ++i) {
          label_of[m.classes[i]] = static_cast<int>(i);
        }
        have_classes = true;
      } else if (key == "split_seed") {
        try {
          m.split_seed = std::stoull(value);
        } catch (const std::exception&) {
          throw ParseError(where + "split_seed is not an unsigned integer");
        }
      }
      continue;
    }

    if (line.rfind("path,", 0) == 0) continue;  // optional column header
    if (!have_task || !have_classes) {
      throw ParseError(where + "data row before '# task=' and '# classes=' headers");
    }
    const auto fields = split_on(line, ',');
    if (fields.size() < 3 || fields.size() > 4) {
      throw ParseError(where + "expected path,label,subject_id[,landmarks_path], got " +
                       std::to_string(fields.size()) + " fields");
    }
    if (fields[0].empty()) throw ParseError(where + "empty path");
    if (fields[2].empty()) throw ParseError(where + "empty subject_id");
    auto it = label_of.find(fields[1]);
    if (it == label_of.end()) throw ParseError(where + "unknown label '" + fields[1] + "'");
    if (!seen_paths.insert(fields[0]).second) {
      throw ParseError(where + "duplicate path '" + fields[0] + "'");
    }
    ManifestEntry entry{fields[0], it->second, fields[2], std::nullopt};
    if (fields.size() == 4 && !fields[3].empty()) entry.landmarks_path = fields[3];
    m.entries.push_back(std::move(entry));
  }
  if (!have_task) throw ParseError("manifest missing '# task=' header");
  if (!have_classes) throw ParseError("manifest missing '# classes=' header");
  validate_manifest(m);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str(), path.parent_path());
}

std::string format_manifest(const DatasetManifest& m) {
  std::ostringstream out;
  out << "# task=" << task_name(m.task) << "\n# classes=";
  for (std::size_t i = 0; i < m.classes.size(); ++i) out << (i ? "," : "") << m.classes[i];
  out << "\n# split_seed=" << m.split_seed << "\n";
  for (const auto& e : m.entries) {
    out << e.path << ',' << m.classes.at(static_cast<std::size_t>(e.label)) << ',' << e.subject_id;
    if (e.landmarks_path) out << ',' << *e.landmarks_path;
    out << '\n';
  }
  return out.str();
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write manifest " + path.string());
  out << format_manifest(m);
}

std::string format_class_counts(const DatasetManifest& m) {
  const auto counts = m.class_counts();
  std::size_t width = 5;
  for (const auto& c : m.classes) width = std::max(width, c.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "class" << "  count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(width)) << m.classes[i] << "  " << counts[i]
        << '\n';
  }
  return out.str();
}

ImageSample load_sample(const DatasetManifest& m, const ManifestEntry& entry) {
  ImageSample sample;
  sample.source_path = m.resolve(entry.path).string();
  sample.image = decode_image_file(sample.source_path);
  sample.label = entry.label;
  sample.subject_id = entry.subject_id;
  return sample;
}

void validate_preprocess(const PreprocessSpec& spec) {
  if (spec.height == 0 || spec.width == 0) throw ConfigError("preprocess target size must be positive");
  if (spec.normalize) {
    const std::size_t c = spec.channels();
    if ((spec.mean.size() != 1 && spec.mean.size() != c) ||
        (spec.stddev.size() != 1 && spec.stddev.size() != c)) {
      throw ConfigError("preprocess mean/std must have 1 or " + std::to_string(c) + " values");
    }
    for (double s : spec.stddev) {
      if (!(s > 0.0)) throw ConfigError("preprocess std must be positive");
    }
  }
}

PreprocessSpec default_preprocess(Task task) {
  PreprocessSpec spec;
  if (task == Task::emotion) spec.height = spec.width = 48;
  return spec;
}

Tensor preprocess(const Image& image, const PreprocessSpec& spec) {
  validate_preprocess(spec);
  if (image.width == 0 || image.height == 0 || image.pixels.empty()) {
    throw DimensionError("cannot preprocess an image with zero width or height");
  }
  const Image colored = spec.color == ColorMode::grayscale ? to_grayscale(image) : to_rgb(image);
  const Image sized = resize_bilinear(colored, spec.height, spec.width);
  const std::size_t c = spec.channels();
  Tensor out({c, spec.height, spec.width});
  auto data = out.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double mean = spec.normalize ? spec.mean[spec.mean.size() == 1 ? 0 : ch] : 0.0;
    const double stddev = spec.normalize ? spec.stddev[spec.stddev.size() == 1 ? 0 : ch] : 1.0;
    for (std::size_t r = 0; r < spec.height; ++r) {
      for (std::size_t col = 0; col < spec.width; ++col) {
        const double scaled = sized.at(r, col, ch) / 255.0;
        data[(ch * spec.height + r) * spec.width + col] =
            spec.normalize ? (scaled - mean) / stddev : scaled;
      }
    }
  }
  return out;
}

SplitResult split(const DatasetManifest& m, const SplitPolicy& policy) {
  if (!(policy.test_fraction >= 0.0 && policy.test_fraction < 1.0)) {
    throw RangeError("split test fraction must be in [0, 1)");
  }
  SplitResult result;
  Rng rng(policy.seed);

  if (policy.kind == SplitPolicy::Kind::random_stratified) {
    std::vector<std::vector<ManifestEntry>> per_class(m.classes.size());
    for (const auto& e : m.entries) per_class[static_cast<std::size_t>(e.label)].push_back(e);
    for (auto& group : per_class) {
      std::stable_sort(group.begin(), group.end(),
                       [](const auto& a, const auto& b) { return a.path < b.path; });
      rng.shuffle(group);
      const auto n_test = static_cast<std::size_t>(
          std::floor(policy.test_fraction * static_cast<double>(group.size()) + 0.5));
      for (std::size_t i = 0; i < group.size(); ++i) {
        (i < n_test ? result.test : result.train).push_back(group[i]);
      }
    }
    return result;
  }

  std::vector<std::set<std::string>> subjects_per_class(m.classes.size());
  std::set<std::string> all_subjects;
  for (const auto& e : m.entries) {
    subjects_per_class[static_cast<std::size_t>(e.label)].insert(e.subject_id);
    all_subjects.insert(e.subject_id);
  }
  for (std::size_t k = 0; k < subjects_per_class.size(); ++k) {
    if (subjects_per_class[k].size() < 2) {
      throw InfeasibleError("subject-disjoint split needs at least two subjects in class '" +
                            m.classes[k] + "'");
    }
  }
  std::vector<std::string> subjects(all_subjects.begin(), all_subjects.end());
  rng.shuffle(subjects);
  auto n_test = static_cast<std::size_t>(
      std::floor(policy.test_fraction * static_cast<double>(subjects.size()) + 0.5));
  if (policy.test_fraction > 0.0) n_test = std::clamp<std::size_t>(n_test, 1, subjects.size() - 1);
  const std::set<std::string> test_subjects(subjects.begin(),
                                            subjects.begin() + static_cast<std::ptrdiff_t>(n_test));
  for (const auto& e : m.entries) {
    (test_subjects.count(e.subject_id) ? result.test : result.train).push_back(e);
  }
  return result;
}

LabeledTensors load_tensors(const DatasetManifest& m, std::span<const ManifestEntry> entries,
                            const PreprocessSpec& spec) {
  validate_preprocess(spec);
  LabeledTensors out;
  if (entries.empty()) return out;
  const std::size_t per_sample = spec.channels() * spec.height * spec.width;
  out.inputs = Tensor({entries.size(), spec.channels(), spec.height, spec.width});
  out.labels.resize(entries.size());

  std::vector<std::exception_ptr> errors(entries.size());
  const auto count = static_cast<std::ptrdiff_t>(entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      const auto& entry = entries[static_cast<std::size_t>(i)];
      const Tensor t = preprocess(load_sample(m, entry).image, spec);
      std::copy(t.data().begin(), t.data().end(),
                out.inputs.data().begin() + i * static_cast<std::ptrdiff_t>(per_sample));
      out.labels[static_cast<std::size_t>(i)] = entry.label;
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

LabeledTensors gather(const LabeledTensors& data, std::span<const std::size_t> rows) {
  LabeledTensors out;
  if (rows.empty()) return out;
  Shape shape = data.inputs.shape();
  const std::size_t per_sample = data.inputs.size() / shape[0];
  shape[0] = rows.size();
  out.inputs = Tensor(shape);
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = data.inputs.data().subspan(rows[i] * per_sample, per_sample);
    std::copy(src.begin(), src.end(), out.inputs.data().begin() + static_cast<std::ptrdiff_t>(i * per_sample));
    out.labels.push_back(data.labels[rows[i]]);
  }
  return out;
}

}  // namespace identiface
