#include "identiface/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "identiface/error.hpp"
#include "identiface/image_io.hpp"

namespace identiface {

namespace {

constexpr char kMagic[4] = {'I', 'D', 'F', 'C'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  for (double v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

struct Envelope {
  nlohmann::json header;
  std::span<const std::uint8_t> payload;
};

std::vector<std::uint8_t> wrap(const nlohmann::json& header,
                               const std::vector<const Tensor*>& tensors) {
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kModelFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const Tensor* t : tensors) put_tensor(out, *t);
  return out;
}

Envelope unwrap(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a model file (bad magic)");
  }
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32(bytes.data() + 8);
  if (bytes.size() - 12 < header_len) throw FormatError("model header truncated");
  Envelope env;
  try {
    env.header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model header is not valid JSON: ") + e.what());
  }
  if (!env.header.is_object() || !env.header.contains("kind") || !env.header["kind"].is_string()) {
    throw FormatError("model header lacks 'kind'");
  }
  env.payload = bytes.subspan(12 + header_len);
  return env;
}

std::vector<Tensor> read_tensors(std::span<const std::uint8_t> payload,
                                 const std::vector<Shape>& shapes) {
  std::size_t needed = 0;
  for (const auto& s : shapes) needed += shape_size(s) * 4;
  if (payload.size() < needed) {
    throw FormatError("model payload truncated: " + std::to_string(payload.size()) + " of " +
                      std::to_string(needed) + " bytes");
  }
  if (payload.size() > needed) throw FormatError("model payload has trailing bytes");
  std::vector<Tensor> out;
  std::size_t offset = 0;
  for (const auto& s : shapes) {
    Tensor t(s);
    for (double& v : t.data()) {
      const float f = std::bit_cast<float>(get_u32(payload.data() + offset));
      if (!std::isfinite(f)) throw FormatError("model payload contains a non-finite weight");
      v = static_cast<double>(f);
      offset += 4;
    }
    out.push_back(std::move(t));
  }
  return out;
}

// The tensor table must agree with the shapes implied by the spec.
std::vector<Shape> checked_table(const nlohmann::json& table, const std::vector<ParameterInfo>& expected) {
  if (!table.is_array() || table.size() != expected.size()) {
    throw FormatError("tensor table has " + std::to_string(table.is_array() ? table.size() : 0) +
                      " entries, spec implies " + std::to_string(expected.size()));
  }
  std::vector<Shape> shapes;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto shape = table[i].at("shape").get<Shape>();
    if (shape != expected[i].shape) {
      throw FormatError("shape mismatch for " + expected[i].name + ": file has " +
                        shape_to_string(shape) + ", spec implies " +
                        shape_to_string(expected[i].shape));
    }
    shapes.push_back(shape);
  }
  return shapes;
}

}  // namespace

nlohmann::json spec_to_json(const ModelSpec& s) {
  return {{"task", task_name(s.task)},
          {"input", {s.channels, s.height, s.width}},
          {"conv_blocks", s.conv_blocks},
          {"width_multiplier", s.width_multiplier},
          {"dense_hidden", s.dense_hidden},
          {"dropout", s.dropout},
          {"init_seed", s.init_seed}};
}

ModelSpec spec_from_json(const nlohmann::json& doc) {
  ModelSpec s;
  s.task = parse_task(doc.at("task").get<std::string>());
  const auto input = doc.at("input").get<std::vector<std::size_t>>();
  if (input.size() != 3) throw FormatError("spec input must be [C, H, W]");
  s.channels = input[0];
  s.height = input[1];
  s.width = input[2];
  s.conv_blocks = doc.at("conv_blocks").get<std::vector<std::vector<std::size_t>>>();
  s.width_multiplier = doc.at("width_multiplier").get<double>();
  s.dense_hidden = doc.at("dense_hidden").get<std::vector<std::size_t>>();
  s.dropout = doc.at("dropout").get<double>();
  s.init_seed = doc.at("init_seed").get<std::uint64_t>();
  return s;
}

nlohmann::json preprocess_to_json(const PreprocessSpec& p) {
  return {{"size", {p.height, p.width}},
          {"color", p.color == ColorMode::grayscale ? "grayscale" : "rgb"},
          {"normalize", p.normalize},
          {"mean", p.mean},
          {"std", p.stddev}};
}

PreprocessSpec preprocess_from_json(const nlohmann::json& doc) {
  PreprocessSpec p;
  const auto size = doc.at("size").get<std::vector<std::size_t>>();
  if (size.size() != 2) throw FormatError("preprocess size must be [H, W]");
  p.height = size[0];
  p.width = size[1];
  const auto color = doc.at("color").get<std::string>();
  if (color != "grayscale" && color != "rgb") throw FormatError("unknown color mode " + color);
  p.color = color == "grayscale" ? ColorMode::grayscale : ColorMode::rgb;
  p.normalize = doc.at("normalize").get<bool>();
  p.mean = doc.at("mean").get<std::vector<double>>();
  p.stddev = doc.at("std").get<std::vector<double>>();
  return p;
}

std::vector<std::uint8_t> serialize_model(const TrainedModel& model) {
  const auto layout = parameter_layout(model.spec);
  if (layout.size() != model.weights.size()) throw SpecError("model weights do not match its spec");
  nlohmann::json header;
  header["kind"] = "cnn";
  header["spec"] = spec_to_json(model.spec);
  header["label_map"] = model.spec.label_map;
  header["preprocess"] = preprocess_to_json(model.preprocess);
  header["tensors"] = nlohmann::json::array();
  std::vector<const Tensor*> tensors;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (model.weights[i].shape() != layout[i].shape) {
      throw SpecError("weight " + layout[i].name + " has shape " +
                      shape_to_string(model.weights[i].shape()));
    }
    header["tensors"].push_back({{"name", layout[i].name}, {"shape", layout[i].shape}});
    tensors.push_back(&model.weights[i]);
  }
  header["history"] = nlohmann::json::array();
  for (const auto& r : model.history) {
    header["history"].push_back({{"epoch", r.epoch},
                                 {"train_loss", r.train_loss},
                                 {"train_accuracy", r.train_accuracy},
                                 {"val_loss", r.val_loss},
                                 {"val_accuracy", r.val_accuracy}});
  }
  header["provenance"] = model.provenance;
  return wrap(header, tensors);
}

TrainedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  const Envelope env = unwrap(bytes);
  if (env.header["kind"] != "cnn") throw FormatError("model file does not hold a CNN");
  try {
    TrainedModel model;
    model.spec = spec_from_json(env.header.at("spec"));
    model.spec.label_map = env.header.at("label_map").get<std::vector<std::string>>();
    model.preprocess = preprocess_from_json(env.header.at("preprocess"));
    std::vector<ParameterInfo> layout;
    try {
      layout = parameter_layout(model.spec);
    } catch (const SpecError& e) {
      throw FormatError(std::string("invalid model spec: ") + e.what());
    }
    const auto shapes = checked_table(env.header.at("tensors"), layout);
    model.weights = read_tensors(env.payload, shapes);
    for (const auto& r : env.header.at("history")) {
      model.history.push_back({r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(),
                               r.at("train_accuracy").get<double>(), r.at("val_loss").get<double>(),
                               r.at("val_accuracy").get<double>()});
    }
    model.provenance = env.header.value("provenance", nlohmann::json::object());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file_bytes(path));
}

std::vector<std::uint8_t> serialize_svm(const SvmModel& model) {
  const std::size_t k = model.weights.size(), d = model.dim();
  if (k == 0 || model.bias.size() != k || model.classes.size() != k) {
    throw SpecError("SVM model is inconsistent");
  }
  if (d != family_dim(model.family)) {
    throw SpecError("SVM weights have " + std::to_string(d) + " features, " +
                    std::string(family_name(model.family)) + " has " +
                    std::to_string(family_dim(model.family)));
  }
  Tensor w({k, d});
  for (std::size_t c = 0; c < k; ++c) {
    if (model.weights[c].size() != d) throw SpecError("SVM weight rows differ in length");
    std::copy(model.weights[c].begin(), model.weights[c].end(), w.data().begin() + static_cast<std::ptrdiff_t>(c * d));
  }
  const Tensor b({k}, model.bias);
  nlohmann::json header;
  header["kind"] = "svm";
  header["label_map"] = model.classes;
  header["family"] = family_name(model.family);
  header["lambda"] = model.lambda;
  header["tensors"] = {{{"name", "svm.weight"}, {"shape", w.shape()}},
                       {{"name", "svm.bias"}, {"shape", b.shape()}}};
  return wrap(header, {&w, &b});
}

SvmModel deserialize_svm(std::span<const std::uint8_t> bytes) {
  const Envelope env = unwrap(bytes);
  if (env.header["kind"] != "svm") throw FormatError("model file does not hold an SVM");
  try {
    SvmModel model;
    model.classes = env.header.at("label_map").get<std::vector<std::string>>();
    model.family = parse_family(env.header.at("family").get<std::string>());
    model.lambda = env.header.at("lambda").get<double>();
    const std::size_t k = model.classes.size(), d = family_dim(model.family);
    const auto shapes = checked_table(env.header.at("tensors"),
                                      {{"svm.weight", {k, d}}, {"svm.bias", {k}}});
    const auto tensors = read_tensors(env.payload, shapes);
    for (std::size_t c = 0; c < k; ++c) {
      const auto row = tensors[0].data().subspan(c * d, d);
      model.weights.emplace_back(row.begin(), row.end());
    }
    model.bias.assign(tensors[1].data().begin(), tensors[1].data().end());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  } catch (const DimensionError& e) {
    throw FormatError(std::string("malformed model header: ") + e.what());
  }
}

void save_svm(const SvmModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_svm(model));
}

SvmModel load_svm(const std::filesystem::path& path) {
  return deserialize_svm(read_file_bytes(path));
}

std::string model_kind(std::span<const std::uint8_t> bytes) {
  return unwrap(bytes).header["kind"].get<std::string>();
}

std::string model_version(std::span<const std::uint8_t> bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

}  // namespace identiface
