#include "identiface/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <array>
#include <sstream>

#include "identiface/error.hpp"
#include "identiface/image_io.hpp"
#include "identiface/model_io.hpp"

namespace identiface {

void ServiceConfig::validate() const {
  if (model_paths.empty()) throw ConfigError("service needs at least one model (model.<task>=path)");
  if (port < 0 || port > 65535) throw ConfigError("port must be in [0, 65535]");
  if (!(frame_rate_cap >= 1.0)) throw ConfigError("frame_rate_cap must be >= 1");
  if (max_request_bytes == 0) throw ConfigError("max_request_bytes must be positive");
}

ServiceConfig service_config_from(const KeyValueConfig& kv) {
  ServiceConfig cfg;
  cfg.port = static_cast<int>(kv.get_uint("port", static_cast<std::uint64_t>(cfg.port)));
  cfg.max_request_bytes = kv.get_uint("max_request_bytes", cfg.max_request_bytes);
  cfg.frame_rate_cap = kv.get_double("frame_rate_cap", cfg.frame_rate_cap);
  for (const auto& [task, path] : kv.with_prefix("model.")) {
    cfg.model_paths[parse_task(task)] = path;
  }
  return cfg;
}

FrameRateLimiter::FrameRateLimiter(double frames_per_second, SteadyClock clock)
    : cap_(frames_per_second), clock_(std::move(clock)) {}

bool FrameRateLimiter::try_acquire() {
  std::lock_guard lock(mutex_);
  const auto now = clock_();
  while (!recent_.empty() && now - recent_.front() >= std::chrono::seconds(1)) recent_.pop_front();
  if (static_cast<double>(recent_.size()) >= cap_) return false;
  recent_.push_back(now);
  return true;
}

HttpReply error_reply(int status, std::string_view code, std::string_view message) {
  return {status, {{"error", {{"code", code}, {"message", message}}}}};
}

nlohmann::json prediction_to_json(Task task, const TrainedModel& model, const Prediction& p,
                                  std::string_view model_version, double latency_ms) {
  const auto& labels = model.spec.label_map;
  nlohmann::json probs = nlohmann::json::object();
  for (std::size_t k = 0; k < labels.size(); ++k) probs[labels[k]] = p.probabilities[k];
  nlohmann::json top2 = nlohmann::json::array();
  for (const auto& t : p.top2) {
    top2.push_back({{"label", labels[static_cast<std::size_t>(t.label)]}, {"percent", t.percent}});
  }
  return {{"task", task_name(task)},
          {"label", labels[static_cast<std::size_t>(p.label)]},
          {"label_index", p.label},
          {"probabilities", probs},
          {"top2", top2},
          {"model_version", model_version},
          {"latency_ms", latency_ms}};
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  static const auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    const std::string alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    for (std::size_t i = 0; i < alphabet.size(); ++i) t[static_cast<unsigned char>(alphabet[i])] = static_cast<int>(i);
    return t;
  }();
  std::vector<std::uint8_t> out;
  std::uint32_t buffer = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=' || ch == '\n' || ch == '\r' || ch == ' ') continue;
    const int v = table[static_cast<unsigned char>(ch)];
    if (v < 0) throw FormatError("invalid base64 character");
    buffer = (buffer << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((buffer >> bits) & 0xFFu));
    }
  }
  return out;
}

Image decode_request_image(std::span<const std::uint8_t> body, std::string_view content_type) {
  if (content_type.rfind("application/json", 0) == 0) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body.begin(), body.end());
    } catch (const nlohmann::json::exception&) {
      throw FormatError("request body is not valid JSON");
    }
    if (!doc.is_object() || !doc.contains("image_base64") || !doc["image_base64"].is_string()) {
      throw FormatError("JSON body needs an 'image_base64' string field");
    }
    return decode_image(base64_decode(doc["image_base64"].get<std::string>()));
  }
  return decode_image(body);
}

InferenceService::InferenceService(ServiceConfig config, SteadyClock clock)
    : config_(std::move(config)), limiter_(config_.frame_rate_cap, std::move(clock)) {}

void InferenceService::load_configured_models() {
  for (const auto& [task, path] : config_.model_paths) load_model(task, path);
}

void InferenceService::load_model(Task task, const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  TrainedModel model = deserialize_model(bytes);
  if (model.spec.task != task) {
    throw ConfigError("model " + path.string() + " was trained for task '" +
                      std::string(task_name(model.spec.task)) + "', not '" +
                      std::string(task_name(task)) + "'");
  }
  set_model(task, std::move(model), model_version(bytes));
}

void InferenceService::set_model(Task task, TrainedModel model, std::string version) {
  auto snap = std::make_shared<const Snapshot>(Snapshot{std::move(model), std::move(version)});
  std::unique_lock lock(mutex_);
  models_[task] = std::move(snap);
}

void InferenceService::unload_model(Task task) {
  std::unique_lock lock(mutex_);
  models_.erase(task);
}

std::shared_ptr<const InferenceService::Snapshot> InferenceService::snapshot(Task task) const {
  std::shared_lock lock(mutex_);
  auto it = models_.find(task);
  return it == models_.end() ? nullptr : it->second;
}

HttpReply InferenceService::run(Task task, const Snapshot& snap, const Image& image) const {
  const auto start = std::chrono::steady_clock::now();
  const Prediction p = identiface::predict(snap.model, image);
  const double latency =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return {200, prediction_to_json(task, snap.model, p, snap.version, latency)};
}

HttpReply InferenceService::predict(std::string_view task_text, std::span<const std::uint8_t> body,
                                    std::string_view content_type) const {
  const auto task = try_parse_task(task_text);
  if (!task) return error_reply(404, "unknown_task", "unknown task '" + std::string(task_text) + "'");
  if (body.size() > config_.max_request_bytes) {
    return error_reply(413, "payload_too_large",
                       "request body exceeds " + std::to_string(config_.max_request_bytes) + " bytes");
  }
  const auto snap = snapshot(*task);
  if (!snap) {
    return error_reply(503, "model_not_loaded",
                       "no model loaded for task '" + std::string(task_text) + "'");
  }
  Image image;
  try {
    image = decode_request_image(body, content_type);
  } catch (const FormatError& e) {
    return error_reply(422, "undecodable_image", e.what());
  }
  try {
    return run(*task, *snap, image);
  } catch (const Error& e) {
    return error_reply(422, e.code(), e.what());
  }
}

HttpReply InferenceService::predict_frame(std::string_view tasks_text,
                                          std::span<const std::uint8_t> body,
                                          std::string_view content_type) {
  std::vector<Task> tasks;
  std::istringstream in{std::string(tasks_text)};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto task = try_parse_task(item);
    if (!task) return error_reply(404, "unknown_task", "unknown task '" + item + "'");
    if (offline_only(*task)) {
      return error_reply(422, "offline_only",
                         "recognition is offline only; post single images to "
                         "/v1/predict/recognition");
    }
    tasks.push_back(*task);
  }
  if (tasks.empty()) return error_reply(400, "no_tasks", "query parameter 'tasks' is empty");
  if (body.size() > config_.max_request_bytes) {
    return error_reply(413, "payload_too_large",
                       "frame exceeds " + std::to_string(config_.max_request_bytes) + " bytes");
  }
  if (!limiter_.try_acquire()) {
    return error_reply(429, "frame_rate_exceeded",
                       "more than " + std::to_string(config_.frame_rate_cap) + " frames per second");
  }
  std::vector<std::shared_ptr<const Snapshot>> snaps;
  for (Task t : tasks) {
    auto snap = snapshot(t);
    if (!snap) {
      return error_reply(503, "model_not_loaded",
                         "no model loaded for task '" + std::string(task_name(t)) + "'");
    }
    snaps.push_back(std::move(snap));
  }
  Image image;
  try {
    image = decode_request_image(body, content_type);
  } catch (const FormatError& e) {
    return error_reply(422, "undecodable_image", e.what());
  }
  nlohmann::json results = nlohmann::json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    try {
      results.push_back(run(tasks[i], *snaps[i], image).body);
    } catch (const Error& e) {
      return error_reply(422, e.code(), e.what());
    }
  }
  return {200, {{"results", results}}};
}

HttpReply InferenceService::models() const {
  nlohmann::json list = nlohmann::json::array();
  std::shared_lock lock(mutex_);
  for (const auto& [task, snap] : models_) {
    const auto& spec = snap->model.spec;
    list.push_back({{"task", task_name(task)},
                    {"label_map", spec.label_map},
                    {"input", {{"channels", spec.channels}, {"height", spec.height}, {"width", spec.width}}},
                    {"model_version", snap->version},
                    {"offline_only", offline_only(task)}});
  }
  return {200, {{"models", list}, {"frame_rate_cap", config_.frame_rate_cap}}};
}

void InferenceService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  auto bytes_of = [](const httplib::Request& req) {
    return std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(req.body.data()),
                                         req.body.size());
  };
  server.Post("/v1/predict/frame", [this, send, bytes_of](const httplib::Request& req,
                                                          httplib::Response& res) {
    send(res, predict_frame(req.get_param_value("tasks"), bytes_of(req),
                            req.get_header_value("Content-Type")));
  });
  server.Post(R"(/v1/predict/([^/]+))", [this, send, bytes_of](const httplib::Request& req,
                                                               httplib::Response& res) {
    send(res, predict(req.matches[1].str(), bytes_of(req), req.get_header_value("Content-Type")));
  });
  server.Get("/v1/models", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, models());
  });
  server.set_error_handler([send](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send(res, error_reply(res.status, "http_error", "request failed with status " +
                                                           std::to_string(res.status)));
    }
  });
}

}  // namespace identiface
