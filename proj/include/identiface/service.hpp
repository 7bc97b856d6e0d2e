#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "identiface/config.hpp"
#include "identiface/dataset.hpp"
#include "identiface/model.hpp"

namespace httplib {
class Server;
}

namespace identiface {

struct ServiceConfig {
  int port = 8080;
  std::map<Task, std::filesystem::path> model_paths;
  std::size_t max_request_bytes = 8 * 1024 * 1024;
  double frame_rate_cap = 10.0;  // frames per second on /v1/predict/frame

  /// Serving requires at least one model, a valid port and a cap >= 1.
  void validate() const;
};

/// Keys: port, max_request_bytes, frame_rate_cap, model.<task>=<path>.
ServiceConfig service_config_from(const KeyValueConfig& config);

/// Recognition runs only on uploaded stills, never on live frames.
inline bool offline_only(Task task) { return task == Task::recognition; }

using SteadyClock = std::function<std::chrono::steady_clock::time_point()>;

/// Sliding one-second window limiter.
class FrameRateLimiter {
 public:
  FrameRateLimiter(double frames_per_second, SteadyClock clock);
  bool try_acquire();

 private:
  double cap_;
  SteadyClock clock_;
  std::mutex mutex_;
  std::deque<std::chrono::steady_clock::time_point> recent_;
};

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

HttpReply error_reply(int status, std::string_view code, std::string_view message);

/// The JSON document shared by the service and the CLI `predict` command.
nlohmann::json prediction_to_json(Task task, const TrainedModel& model, const Prediction& prediction,
                                  std::string_view model_version, double latency_ms);

/// Accepts raw PGM/PPM/PNG bytes, or a JSON body {"image_base64": "..."}
/// when the content type is application/json.
Image decode_request_image(std::span<const std::uint8_t> body, std::string_view content_type);

std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Request handlers for the /v1 API. Loaded models are immutable
/// snapshots; load_model swaps a task's snapshot atomically.
class InferenceService {
 public:
  explicit InferenceService(ServiceConfig config, SteadyClock clock = std::chrono::steady_clock::now);

  /// Loads every model listed in the config.
  void load_configured_models();
  void load_model(Task task, const std::filesystem::path& path);
  void set_model(Task task, TrainedModel model, std::string version);
  void unload_model(Task task);

  HttpReply predict(std::string_view task, std::span<const std::uint8_t> body,
                    std::string_view content_type) const;
  HttpReply predict_frame(std::string_view tasks, std::span<const std::uint8_t> body,
                          std::string_view content_type);
  HttpReply models() const;

  /// Registers the routes on an httplib server.
  void mount(httplib::Server& server);

  const ServiceConfig& config() const { return config_; }

 private:
  struct Snapshot {
    TrainedModel model;
    std::string version;
  };

  std::shared_ptr<const Snapshot> snapshot(Task task) const;
  HttpReply run(Task task, const Snapshot& snap, const Image& image) const;

  ServiceConfig config_;
  FrameRateLimiter limiter_;
  mutable std::shared_mutex mutex_;
  std::map<Task, std::shared_ptr<const Snapshot>> models_;
};

}  // namespace identiface
