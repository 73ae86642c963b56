// SPDX-License-Identifier: Apache-2.0
#include "das/service.hpp"

#include <fstream>
#include <sstream>

#include "das/json_io.hpp"
#include "httplib.h"

namespace das::service {
namespace {

ApiResponse error_response(int status, const std::string& message) {
  return {status, {{"error", message}}};
}

ApiResponse validation_response(const std::vector<FieldError>& errors) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
  return {422, {{"error", "invalid configuration"}, {"errors", std::move(list)}}};
}

}  // namespace

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::kIdle: return "idle";
    case Phase::kAcquiring: return "acquiring";
    case Phase::kError: return "error";
  }
  return "idle";
}

ServiceSettings settings_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("", "service configuration must be an object");
  ServiceSettings settings;
  std::vector<FieldError> errors;
  for (const auto& [key, value] : j.items()) {
    if (key != "listen" && key != "device" && key != "static_dir" && key != "acquisition") {
      errors.push_back({key, "unknown field"});
    }
  }
  try {
    settings.listen = j.value("listen", settings.listen);
    settings.device = j.value("device", settings.device);
    if (j.contains("static_dir")) settings.static_dir = j["static_dir"].get<std::string>();
  } catch (const nlohmann::json::exception&) {
    errors.push_back({"", "listen, device and static_dir must be strings"});
  }
  if (j.contains("acquisition")) {
    auto patch = apply_config_patch(j["acquisition"], settings.acquisition, settings.log);
    for (auto& e : patch.errors) errors.push_back({"acquisition." + e.field, e.message});
    settings.acquisition = patch.config;
    settings.log = patch.log;
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return settings;
}

struct Service::Run {
  DeviceLink link;
  std::unique_ptr<LogWriter> writer;
  std::unique_ptr<BufferSink> buffer_sink;
  std::unique_ptr<LogSink> log_sink;
  std::unique_ptr<TeeSink> tee;
  std::unique_ptr<Session> session;
  std::thread worker;
  std::atomic<bool> finished{false};
  std::string failure;  // written by the worker before `finished`
};

Service::Service(ServiceSettings settings)
    : settings_(std::move(settings)),
      started_(std::chrono::steady_clock::now()),
      buffer_(std::make_shared<RecordBuffer>(settings_.acquisition.buffer_capacity)),
      config_(settings_.acquisition),
      log_policy_(settings_.log) {
  config_.validate();
  if (auto errors = log_policy_.check(); !errors.empty()) throw ConfigError(std::move(errors));
}

Service::~Service() { shutdown(); }

Phase Service::phase_locked() const {
  if (phase_ == Phase::kAcquiring && run_ && run_->finished.load()) return Phase::kError;
  return phase_;
}

Phase Service::phase() const {
  std::lock_guard lock(mutex_);
  return phase_locked();
}

std::shared_ptr<RecordBuffer> Service::buffer() const {
  std::lock_guard lock(mutex_);
  return buffer_;
}

std::optional<std::filesystem::path> Service::latest_log() const {
  std::lock_guard lock(mutex_);
  return last_log_;
}

ApiResponse Service::status() const {
  std::lock_guard lock(mutex_);
  const auto summary = run_ ? run_->session->summary() : last_summary_;
  const auto phase = phase_locked();
  nlohmann::json body{
      {"phase", std::string(to_string(phase))},
      {"polls", summary.polls},
      {"records", summary.records},
      {"timeouts", summary.timeouts},
      {"decode_errors", summary.decode_errors},
      {"gaps", summary.gaps},
      {"missed", summary.missed},
      {"uptime_s",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count()},
      {"device", settings_.device},
      {"log_file", last_log_ ? nlohmann::json(last_log_->string()) : nlohmann::json()},
  };
  if (phase == Phase::kError) body["error"] = run_->failure;
  return {200, std::move(body)};
}

ApiResponse Service::get_config() const {
  std::lock_guard lock(mutex_);
  return {200, config_to_json(config_, log_policy_)};
}

ApiResponse Service::put_config(const nlohmann::json& body) {
  std::lock_guard lock(mutex_);
  auto patch = apply_config_patch(body, config_, log_policy_);
  const bool acquiring = phase_locked() == Phase::kAcquiring;
  if (acquiring && patch.touches_fixed_fields) {
    return error_response(409, "only enabled_channels can change while acquiring");
  }
  if (!patch.errors.empty()) return validation_response(patch.errors);
  if (acquiring) run_->session->set_enabled_channels(patch.config.enabled_channels);
  config_ = patch.config;
  log_policy_ = patch.log;
  return {200, config_to_json(config_, log_policy_)};
}

ApiResponse Service::start() {
  std::lock_guard lock(mutex_);
  if (phase_locked() != Phase::kIdle) {
    return error_response(409, "cannot start while " + std::string(to_string(phase_locked())));
  }

  auto run = std::make_unique<Run>();
  try {
    run->link = open_device(settings_.device);
  } catch (const std::exception& e) {
    return error_response(502, std::string("device unreachable: ") + e.what());
  }

  std::filesystem::path log_path;
  try {
    std::filesystem::create_directories(log_policy_.directory);
    log_path = log_policy_.file_for(
        std::chrono::floor<std::chrono::milliseconds>(std::chrono::system_clock::now()));
    run->writer = std::make_unique<LogWriter>(log_path, schema_for(config_), log_policy_);
  } catch (const std::exception& e) {
    return error_response(500, std::string("cannot open log: ") + e.what());
  }

  if (buffer_->capacity() != config_.buffer_capacity) {
    buffer_->close();
    buffer_ = std::make_shared<RecordBuffer>(config_.buffer_capacity);
  }
  run->buffer_sink = std::make_unique<BufferSink>(*buffer_);
  run->log_sink = std::make_unique<LogSink>(*run->writer);
  run->tee = std::make_unique<TeeSink>(std::vector<SessionSink*>{run->log_sink.get(), run->buffer_sink.get()});
  run->session = std::make_unique<Session>(*run->link.stream, config_, *run->tee);

  Run* r = run.get();
  r->worker = std::thread([r] {
    try {
      const auto summary = r->session->run();
      if (summary.transport_lost) r->failure = summary.end_cause;
    } catch (const std::exception& e) {
      r->failure = e.what();
    }
    try {
      r->writer->close();
    } catch (const std::exception& e) {
      if (r->failure.empty()) r->failure = e.what();
    }
    // Stopped sessions finish too; only an unprompted end counts as failure.
    if (!r->failure.empty()) r->finished = true;
  });

  run_ = std::move(run);
  last_log_ = log_path;
  phase_ = Phase::kAcquiring;
  return {200, {{"phase", "acquiring"}, {"log_file", log_path.string()}}};
}

ApiResponse Service::stop() {
  std::lock_guard lock(mutex_);
  if (phase_locked() == Phase::kIdle) return error_response(409, "not acquiring");
  run_->session->stop();
  if (run_->worker.joinable()) run_->worker.join();
  last_summary_ = run_->session->summary();
  run_.reset();
  phase_ = Phase::kIdle;
  return {200, {{"phase", "idle"}, {"summary", summary_to_json(last_summary_)}}};
}

void Service::install_routes() {
  auto& svr = *http_;
  const auto reply = [](httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.body.dump(), "application/json");
  };

  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  svr.Get("/status", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, status());
  });
  svr.Get("/config", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, get_config());
  });
  svr.Put("/config", [this, reply](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      reply(res, validation_response({{"", std::string("malformed JSON: ") + e.what()}}));
      return;
    }
    reply(res, put_config(body));
  });
  svr.Post("/acquisition/start", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, start());
  });
  svr.Post("/acquisition/stop", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, stop());
  });

  svr.Get("/log", [this](const httplib::Request&, httplib::Response& res) {
    const auto path = latest_log();
    std::ifstream in;
    if (path) in.open(*path, std::ios::binary);
    if (!path || !in.is_open()) {
      res.status = 404;
      res.set_content(R"({"error":"no log yet"})", "application/json");
      return;
    }
    std::ostringstream content;
    content << in.rdbuf();
    res.set_header("Content-Disposition",
                   "attachment; filename=\"" + path->filename().string() + "\"");
    res.set_content(content.str(), "text/csv");
  });

  svr.Get("/stream", [this](const httplib::Request&, httplib::Response& res) {
    struct StreamState {
      std::shared_ptr<RecordBuffer> buffer;
      Subscription subscription;
    };
    auto buf = buffer();
    auto state = std::make_shared<StreamState>(StreamState{buf, buf->subscribe()});
    res.set_chunked_content_provider(
        "application/x-ndjson", [this, state](std::size_t, httplib::DataSink& sink) {
          if (shutting_down_) return false;
          if (auto current = buffer(); current != state->buffer) {
            state->buffer = current;
            state->subscription = current->subscribe();
          }
          auto record = state->subscription.next(std::chrono::milliseconds(100));
          if (!record) return sink.is_writable();
          const std::string line = record_to_json(*record).dump() + "\n";
          return sink.write(line.data(), line.size());
        });
  });

  if (settings_.static_dir) svr.set_mount_point("/", settings_.static_dir->string());
}

void Service::listen(const Endpoint& endpoint) {
  http_ = std::make_unique<httplib::Server>();
  http_->new_task_queue = [] { return new httplib::ThreadPool(32); };
  // Without SO_REUSEPORT a second server on the same port fails to bind.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  install_routes();
  int port = endpoint.port == 0 ? http_->bind_to_any_port(endpoint.host)
                                : (http_->bind_to_port(endpoint.host, endpoint.port) ? endpoint.port : -1);
  if (port <= 0) throw TransportError("cannot bind HTTP listener on " + endpoint.to_string());
  port_ = static_cast<std::uint16_t>(port);
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
}

void Service::shutdown() {
  if (shutting_down_.exchange(true)) return;
  {
    std::lock_guard lock(mutex_);
    if (run_) {
      run_->session->stop();
      if (run_->worker.joinable()) run_->worker.join();
      last_summary_ = run_->session->summary();
      run_.reset();
      phase_ = Phase::kIdle;
    }
    buffer_->close();
  }
  if (http_) {
    http_->stop();
    if (http_thread_.joinable()) http_thread_.join();
  }
}

}  // namespace das::service
