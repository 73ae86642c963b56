// SPDX-License-Identifier: Apache-2.0
// Control and live-streaming HTTP API for one acquisition at a time.
//
//   GET  /status               {phase, polls, records, timeouts, decode_errors,
//                               gaps, missed, uptime_s, device, log_file}
//   GET  /config, PUT /config  acquisition configuration (see json_io.hpp)
//   POST /acquisition/start    idle -> acquiring     409 wrong phase, 502 no device
//   POST /acquisition/stop     acquiring|error -> idle   409 when idle
//   GET  /stream               newline-delimited JSON records, until disconnect
//   GET  /log                  CSV of the most recent session
//
// Only enabled_channels may change while acquiring; other fields answer 409.
#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "das/acquisition.hpp"
#include "das/device_link.hpp"
#include "das/persistence.hpp"
#include "das/record_buffer.hpp"

namespace httplib {
class Server;
}

namespace das::service {

enum class Phase { kIdle, kAcquiring, kError };

std::string_view to_string(Phase phase) noexcept;

struct ServiceSettings {
  std::string listen = "127.0.0.1:8080";
  std::string device = "sim";
  std::optional<std::filesystem::path> static_dir;
  AcquisitionConfig acquisition;
  LogPolicy log;
};

/// {listen, device, static_dir, acquisition{...}}. Throws ConfigError.
ServiceSettings settings_from_json(const nlohmann::json& j);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  explicit Service(ServiceSettings settings);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Control path shared by the HTTP handlers; every mutation serializes here.
  ApiResponse status() const;
  ApiResponse get_config() const;
  ApiResponse put_config(const nlohmann::json& body);
  ApiResponse start();
  ApiResponse stop();

  Phase phase() const;
  /// Records from the next one published onward. The buffer is replaced
  /// when a session starts with a different buffer_capacity.
  std::shared_ptr<RecordBuffer> buffer() const;
  std::optional<std::filesystem::path> latest_log() const;

  /// Binds the HTTP listener (port 0 picks one) and serves on a background
  /// thread. Throws TransportError if the address cannot be bound.
  void listen(const Endpoint& endpoint);
  std::uint16_t port() const noexcept { return port_; }

  /// Stops acquisition and the HTTP server. Idempotent.
  void shutdown();

 private:
  struct Run;

  Phase phase_locked() const;
  void install_routes();

  ServiceSettings settings_;
  const std::chrono::steady_clock::time_point started_;

  mutable std::mutex mutex_;
  std::shared_ptr<RecordBuffer> buffer_;
  AcquisitionConfig config_;
  LogPolicy log_policy_;
  Phase phase_ = Phase::kIdle;
  std::unique_ptr<Run> run_;
  SessionSummary last_summary_;
  std::optional<std::filesystem::path> last_log_;

  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
  std::uint16_t port_ = 0;
  std::atomic<bool> shutting_down_{false};
};

}  // namespace das::service
