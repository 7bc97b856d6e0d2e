#include "identiface/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "identiface/augmentation.hpp"
#include "identiface/config.hpp"
#include "identiface/error.hpp"
#include "identiface/features.hpp"
#include "identiface/image_io.hpp"
#include "identiface/model_io.hpp"
#include "identiface/rng.hpp"
#include "identiface/service.hpp"
#include "identiface/svm.hpp"
#include "identiface/trainer.hpp"

namespace identiface {
namespace {

struct Options {
  std::string manifest;
  std::string model;
  std::string task;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> port;
  std::string input;
};

KeyValueConfig load_config(const Options& o) {
  return o.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(o.config);
}

std::uint64_t resolve_seed(const Options& o, const KeyValueConfig& kv, std::uint64_t fallback) {
  if (o.seed) return *o.seed;
  return kv.get_uint("seed", fallback);
}

DatasetManifest load_checked_manifest(const Options& o) {
  if (o.manifest.empty()) throw ConfigError("--manifest is required");
  DatasetManifest m = load_manifest(o.manifest);
  if (!o.task.empty() && parse_task(o.task) != m.task) {
    throw ConfigError("--task " + o.task + " does not match manifest task " +
                      std::string(task_name(m.task)));
  }
  return m;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("not a number list: '" + text + "'");
    }
  }
  return out;
}

SplitPolicy split_policy(const KeyValueConfig& kv, double test_size, std::uint64_t seed) {
  const std::string kind = kv.get_string("split", "random_stratified");
  if (kind == "random_stratified") return SplitPolicy::random_stratified(test_size, seed);
  if (kind == "subject_disjoint") return SplitPolicy::subject_disjoint(test_size, seed);
  throw ConfigError("split must be random_stratified or subject_disjoint, got '" + kind + "'");
}

std::vector<double> entry_features(const DatasetManifest& m, const ManifestEntry& e,
                                   FeatureFamily family) {
  if (family == FeatureFamily::landmarks_68) {
    if (!e.landmarks_path) throw DataError("entry " + e.path + " has no landmarks file");
    return landmark_features(load_landmarks(m.resolve(*e.landmarks_path))).values;
  }
  const Image face = resize_bilinear(to_grayscale(load_sample(m, e).image), 48, 48);
  switch (family) {
    case FeatureFamily::face_raw: return face_raw_features(face).values;
    case FeatureFamily::lbp: return lbp_features(face).values;
    default: return gabor_features(face).values;
  }
}

struct FeatureSet {
  std::vector<std::vector<double>> x;
  std::vector<int> labels;
};

FeatureSet feature_set(const DatasetManifest& m, std::span<const ManifestEntry> entries,
                       FeatureFamily family) {
  FeatureSet s;
  for (const auto& e : entries) {
    s.x.push_back(entry_features(m, e, family));
    s.labels.push_back(e.label);
  }
  return s;
}

std::vector<int> svm_labels(const SvmModel& model, const FeatureSet& s) {
  std::vector<int> pred;
  for (const auto& x : s.x) pred.push_back(svm_predict(model, x).label);
  return pred;
}

void print_report(std::ostream& out, const EvalReport& report, std::span<const std::string> names) {
  out << render_report(report, names) << "\n" << render_confusion(report.confusion, names);
  if (report.loss) out << "loss " << std::setprecision(6) << *report.loss << "\n";
}

int cmd_augment(const Options& o, std::ostream& out) {
  const DatasetManifest m = load_checked_manifest(o);
  if (o.out.empty()) throw ConfigError("--out is required");
  const KeyValueConfig kv = load_config(o);
  std::vector<std::optional<std::size_t>> targets(m.classes.size());
  if (kv.has("target")) {
    for (auto& t : targets) t = kv.get_uint("target", 0);
  }
  for (const auto& [name, value] : kv.with_prefix("target.")) {
    const auto it = std::find(m.classes.begin(), m.classes.end(), name);
    if (it == m.classes.end()) throw ConfigError("target for unknown class '" + name + "'");
    targets[static_cast<std::size_t>(it - m.classes.begin())] = kv.get_uint("target." + name, 0);
  }
  const AugmentResult r = augment_manifest(m, targets, resolve_seed(o, kv, m.split_seed), o.out);
  out << r.report.render();
  out << "wrote " << (std::filesystem::path(o.out) / "manifest.csv").string() << "\n";
  return 0;
}

int train_svm(const Options& o, const DatasetManifest& m, const KeyValueConfig& kv,
              std::uint64_t seed, std::ostream& out) {
  const FeatureFamily family = parse_family(kv.get_string("features", "landmarks_68"));
  SvmConfig sc;
  sc.lambda = kv.get_double("lambda", sc.lambda);
  sc.epochs = kv.get_uint("epochs", sc.epochs);
  sc.seed = seed;
  const double test_size = kv.get_double("test_size", 0.2);
  const SplitResult parts = split(m, split_policy(kv, test_size, seed));
  const FeatureSet train_set = feature_set(m, parts.train, family);
  const SvmModel model = svm_train(train_set.x, train_set.labels, m.classes, family, sc);
  const auto train_pred = svm_labels(model, train_set);
  out << "train accuracy " << to_percent(accuracy(confusion_matrix(train_set.labels, train_pred,
                                                                     m.classes.size())))
      << "%\n";
  if (!parts.test.empty()) {
    const FeatureSet test_set = feature_set(m, parts.test, family);
    print_report(out, make_report(test_set.labels, svm_labels(model, test_set), m.classes.size()),
                 m.classes);
  }
  save_svm(model, o.out);
  out << "saved " << o.out << "\n";
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  const DatasetManifest m = load_checked_manifest(o);
  if (o.out.empty()) throw ConfigError("--out is required");
  const KeyValueConfig kv = load_config(o);
  const std::uint64_t seed = resolve_seed(o, kv, m.split_seed);
  const std::string kind = kv.get_string("model", "cnn");
  if (kind == "svm") return train_svm(o, m, kv, seed, out);
  if (kind != "cnn") throw ConfigError("model must be cnn or svm, got '" + kind + "'");

  TrainConfig tc = reference_train_config(m.task);
  tc.lr = kv.get_double("lr", tc.lr);
  tc.batch_size = kv.get_uint("batch_size", tc.batch_size);
  tc.test_size = kv.get_double("test_size", tc.test_size);
  tc.epochs = kv.get_uint("epochs", tc.epochs);
  if (const auto p = kv.get("patience")) {
    tc.patience = *p == "none" ? std::nullopt
                               : std::optional<std::size_t>(kv.get_uint("patience", 0));
  }
  if (kv.has("stop_at_train_accuracy")) {
    tc.stop_at_train_accuracy = kv.get_double("stop_at_train_accuracy", 1.0);
  }
  tc.seed = seed;
  validate_train_config(tc);

  PreprocessSpec pp = default_preprocess(m.task);
  pp.height = kv.get_uint("input_height", pp.height);
  pp.width = kv.get_uint("input_width", pp.width);
  const std::string color = kv.get_string("color", "grayscale");
  if (color == "rgb") {
    pp.color = ColorMode::rgb;
  } else if (color != "grayscale") {
    throw ConfigError("color must be grayscale or rgb");
  }
  pp.normalize = kv.get_bool("normalize", pp.normalize);
  pp.mean = kv.has("mean") ? parse_double_list(*kv.get("mean")) : std::vector<double>(pp.channels(), 0.0);
  pp.stddev = kv.has("std") ? parse_double_list(*kv.get("std")) : std::vector<double>(pp.channels(), 1.0);
  validate_preprocess(pp);

  ModelSpec spec;
  spec.task = m.task;
  spec.channels = pp.channels();
  spec.height = pp.height;
  spec.width = pp.width;
  if (const auto b = kv.get("conv_blocks")) spec.conv_blocks = parse_blocks(*b);
  spec.width_multiplier = kv.get_double("width_multiplier", spec.width_multiplier);
  if (const auto d = kv.get("dense_hidden")) spec.dense_hidden = parse_size_list(*d);
  spec.dropout = kv.get_double("dropout", spec.dropout);
  spec.label_map = m.classes;
  spec.init_seed = derive_seed(seed, 1);

  const SplitResult parts = split(m, split_policy(kv, tc.test_size, seed));
  const LabeledTensors train_set = load_tensors(m, parts.train, pp);
  const LabeledTensors val_set = load_tensors(m, parts.test, pp);
  out << "train " << train_set.count() << " images, validation " << val_set.count() << " images\n";

  TrainedModel model = build_model(spec, pp);
  out << "parameters " << model.parameter_count() << "\n";
  const TrainResult r = train(model, train_set, val_set, tc, [&out](const EpochRecord& e) {
    out << "epoch " << e.epoch << std::fixed << std::setprecision(4) << " loss " << e.train_loss
        << " acc " << e.train_accuracy << " val_loss " << e.val_loss << " val_acc "
        << e.val_accuracy << std::defaultfloat << "\n";
  });
  model.provenance = {{"manifest", std::filesystem::path(o.manifest).filename().string()},
                      {"seed", seed},
                      {"split", kv.get_string("split", "random_stratified")},
                      {"lr", tc.lr},
                      {"batch_size", tc.batch_size},
                      {"epochs_run", r.epochs_run},
                      {"best_epoch", r.best_epoch},
                      {"stopped_early", r.stopped_early}};
  print_report(out, evaluate(model, val_set), m.classes);
  save_model(model, o.out);
  out << "saved " << o.out << "\n";
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  if (o.model.empty()) throw ConfigError("--model is required");
  const DatasetManifest m = load_checked_manifest(o);
  const auto bytes = read_file_bytes(o.model);
  EvalReport report;
  std::vector<std::string> names;
  if (model_kind(bytes) == "svm") {
    const SvmModel model = deserialize_svm(bytes);
    if (model.classes != m.classes) throw DataError("manifest classes differ from the model's");
    const FeatureSet s = feature_set(m, m.entries, model.family);
    report = make_report(s.labels, svm_labels(model, s), model.classes.size());
    names = model.classes;
  } else {
    const TrainedModel model = deserialize_model(bytes);
    if (model.spec.label_map != m.classes) {
      throw DataError("manifest classes differ from the model's label map");
    }
    if (model.spec.task != m.task) throw DataError("manifest task differs from the model's");
    report = evaluate(model, load_tensors(m, m.entries, model.preprocess));
    names = model.spec.label_map;
  }
  print_report(out, report, names);
  if (!o.out.empty()) {
    std::ofstream(o.out) << report_to_json(report, names).dump(2) << "\n";
  }
  return 0;
}

int cmd_predict(const Options& o, std::ostream& out) {
  if (o.model.empty()) throw ConfigError("--model is required");
  if (o.input.empty()) throw ConfigError("an input file is required");
  const auto bytes = read_file_bytes(o.model);
  const std::string version = model_version(bytes);
  if (model_kind(bytes) == "svm") {
    const SvmModel model = deserialize_svm(bytes);
    std::vector<double> x;
    if (model.family == FeatureFamily::landmarks_68) {
      x = landmark_features(load_landmarks(o.input)).values;
    } else {
      const Image face = resize_bilinear(to_grayscale(decode_image_file(o.input)), 48, 48);
      x = model.family == FeatureFamily::face_raw ? face_raw_features(face).values
          : model.family == FeatureFamily::lbp    ? lbp_features(face).values
                                                  : gabor_features(face).values;
    }
    const SvmPrediction p = svm_predict(model, x);
    nlohmann::json doc = {{"label", model.classes[static_cast<std::size_t>(p.label)]},
                          {"label_index", p.label},
                          {"scores", p.scores},
                          {"features", family_name(model.family)},
                          {"model_version", version}};
    out << doc.dump() << "\n";
    return 0;
  }
  const TrainedModel model = deserialize_model(bytes);
  const Image image = decode_image_file(o.input);
  const auto start = std::chrono::steady_clock::now();
  const Prediction p = predict(model, image);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  out << prediction_to_json(model.spec.task, model, p, version, ms).dump() << "\n";
  return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
  ServiceConfig cfg = service_config_from(load_config(o));
  if (o.port) cfg.port = *o.port;
  if (!o.model.empty()) {
    if (o.task.empty()) throw ConfigError("--model needs --task when serving");
    cfg.model_paths[parse_task(o.task)] = o.model;
  }
  cfg.validate();
  InferenceService service(cfg);
  service.load_configured_models();
  httplib::Server server;
  service.mount(server);
  out << "serving on port " << cfg.port << "\n" << std::flush;
  if (!server.listen("0.0.0.0", cfg.port)) throw ConfigError("cannot bind port " + std::to_string(cfg.port));
  return 0;
}

int cmd_report(const Options& o, std::ostream& out) {
  if (!o.input.empty()) {
    std::ifstream in(o.input);
    if (!in) throw FormatError("cannot open " + o.input);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("invalid report JSON: ") + e.what());
    }
    std::vector<std::string> names;
    const EvalReport report = report_from_json(doc, &names);
    print_report(out, report, names);
    return 0;
  }
  if (o.model.empty()) throw ConfigError("report needs --model or a report JSON file");
  const auto bytes = read_file_bytes(o.model);
  out << "model " << o.model << "\nversion " << model_version(bytes) << "\n";
  if (model_kind(bytes) == "svm") {
    const SvmModel model = deserialize_svm(bytes);
    out << "kind svm\nfeatures " << family_name(model.family) << " (" << model.dim() << ")\n";
    out << "lambda " << model.lambda << "\nclasses";
    for (const auto& c : model.classes) out << " " << c;
    out << "\n";
    return 0;
  }
  const TrainedModel model = deserialize_model(bytes);
  out << "kind cnn\ntask " << task_name(model.spec.task) << "\ninput " << model.spec.channels << "x"
      << model.spec.height << "x" << model.spec.width << "\nparameters " << model.parameter_count()
      << "\nclasses";
  for (const auto& c : model.spec.label_map) out << " " << c;
  out << "\n";
  if (!model.history.empty()) {
    out << "\n" << std::setw(6) << "epoch" << std::setw(12) << "loss" << std::setw(10) << "acc"
        << std::setw(12) << "val_loss" << std::setw(10) << "val_acc" << "\n";
    for (const auto& e : model.history) {
      out << std::setw(6) << e.epoch << std::fixed << std::setprecision(4) << std::setw(12)
          << e.train_loss << std::setw(10) << e.train_accuracy << std::setw(12) << e.val_loss
          << std::setw(10) << e.val_accuracy << std::defaultfloat << "\n";
    }
  }
  return 0;
}

}  // namespace

int cli_run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Face soft-biometrics toolkit", "identiface"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_seed = [&o](CLI::App* cmd) {
    cmd->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& s) { o.seed = s; },
                                            "RNG seed");
    cmd->add_option("--config", o.config, "key=value config file");
  };

  auto* augment = app.add_subcommand("augment", "balance a dataset by augmentation/downsampling");
  augment->add_option("--manifest", o.manifest)->required();
  augment->add_option("--out", o.out, "output directory")->required();
  augment->add_option("--task", o.task);
  add_seed(augment);

  auto* trainc = app.add_subcommand("train", "train a CNN or SVM model");
  trainc->add_option("--manifest", o.manifest)->required();
  trainc->add_option("--out", o.out, "model file to write")->required();
  trainc->add_option("--task", o.task);
  add_seed(trainc);

  auto* evalc = app.add_subcommand("eval", "evaluate a model on a manifest");
  evalc->add_option("--model", o.model)->required();
  evalc->add_option("--manifest", o.manifest)->required();
  evalc->add_option("--task", o.task);
  evalc->add_option("--out", o.out, "write the report as JSON");
  add_seed(evalc);

  auto* predictc = app.add_subcommand("predict", "classify one image (or landmark file)");
  predictc->add_option("--model", o.model)->required();
  predictc->add_option("input", o.input)->required();
  add_seed(predictc);

  auto* serve = app.add_subcommand("serve", "run the HTTP inference service");
  serve->add_option_function<int>("--port", [&o](const int& p) { o.port = p; });
  serve->add_option("--model", o.model);
  serve->add_option("--task", o.task);
  add_seed(serve);

  auto* report = app.add_subcommand("report", "summarize a model file or a saved eval report");
  report->add_option("--model", o.model);
  report->add_option("input", o.input, "eval report JSON");
  add_seed(report);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (augment->parsed()) return cmd_augment(o, out);
    if (trainc->parsed()) return cmd_train(o, out);
    if (evalc->parsed()) return cmd_eval(o, out);
    if (predictc->parsed()) return cmd_predict(o, out);
    if (serve->parsed()) return cmd_serve(o, out);
    return cmd_report(o, out);
  } catch (const Error& e) {
    err << "error [" << e.code() << "]: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace identiface
