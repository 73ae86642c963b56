// SPDX-License-Identifier: Apache-2.0
// Host-side polling engine: poll, decode, timestamp, convert, detect gaps.
#pragma once

#include <array>
#include <bitset>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "das/codec.hpp"
#include "das/conversion.hpp"
#include "das/transport.hpp"

namespace das {

using HostTime = std::chrono::sys_time<std::chrono::milliseconds>;
using ChannelMask = std::bitset<kChannelCount>;

struct FieldError {
  std::string field;
  std::string message;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<FieldError> errors);
  ConfigError(std::string field, std::string message)
      : ConfigError(std::vector<FieldError>{{std::move(field), std::move(message)}}) {}
  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

struct AcquisitionConfig {
  int poll_period_ms = 1000;
  int response_timeout_ms = 250;
  ChannelMask enabled_channels = ChannelMask{}.set();
  std::array<std::optional<LinearMap>, kChannelCount> channel_maps{};
  std::size_t buffer_capacity = 65536;

  /// Every violated invariant, one entry per offending field.
  std::vector<FieldError> check() const;
  /// Throws ConfigError when check() reports anything.
  void validate() const;
};

struct ChannelValue {
  double value = 0.0;
  std::string unit;
  QualityFlag flag = QualityFlag::kOk;

  friend bool operator==(const ChannelValue&, const ChannelValue&) = default;
};

struct SampleRecord {
  std::uint8_t seq = 0;
  HostTime host_time{};
  std::array<Counts, kChannelCount> counts{};
  std::array<double, kChannelCount> volts{};
  std::array<std::optional<ChannelValue>, kChannelCount> values{};  // mapped channels only
  ChannelMask enabled;  // selection in force when the record was taken

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Materializes a decoded frame: volts for every channel, values for mapped ones.
SampleRecord make_record(const RawFrame& frame, HostTime host_time,
                         const AcquisitionConfig& config);

struct GapReport {
  std::uint8_t expected_seq = 0;
  std::uint8_t received_seq = 0;
  int missed_count = 0;  // (received - expected) mod 256, always >= 1
  HostTime timestamp{};
};

/// Sequence tracking across a session. Returns a report when `seq` does not
/// follow the previous one. Losses of 256 or more frames alias and are
/// undercounted by a multiple of 256.
class GapDetector {
 public:
  std::optional<GapReport> observe(std::uint8_t seq, HostTime when);
  void reset() { last_.reset(); }

 private:
  std::optional<std::uint8_t> last_;
};

struct PollTimeout {};

struct PollDecodeError {
  DecodeError error;
  std::string bytes;  // the rejected candidate frame
};

using PollResult = std::variant<SampleRecord, PollTimeout, PollDecodeError>;

/// Request/response exchange with the device. Keeps receive state between
/// polls so late or partial bytes do not leak into the next exchange.
class Poller {
 public:
  using Clock = std::function<HostTime()>;

  explicit Poller(ByteStream& stream, Clock clock = {});

  /// Throws TransportError when the link is lost.
  PollResult poll_once(const AcquisitionConfig& config);

 private:
  std::optional<std::string> take_candidate();

  ByteStream& stream_;
  Clock clock_;
  std::string rx_;
};

inline PollResult poll_once(Poller& poller, const AcquisitionConfig& config) {
  return poller.poll_once(config);
}

struct SessionSummary {
  std::uint64_t polls = 0;
  std::uint64_t records = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t gaps = 0;
  std::uint64_t missed = 0;  // sum of missed_count over all gap reports
  bool transport_lost = false;
  std::string end_cause;  // empty while running
};

class SessionSink {
 public:
  virtual ~SessionSink() = default;
  virtual void on_record(const SampleRecord&) {}
  virtual void on_gap(const GapReport&) {}
  virtual void on_timeout() {}
  virtual void on_decode_error(const PollDecodeError&) {}
};

/// Sink that fans out to several others, in order.
class TeeSink : public SessionSink {
 public:
  explicit TeeSink(std::vector<SessionSink*> sinks) : sinks_(std::move(sinks)) {}
  void on_record(const SampleRecord& r) override;
  void on_gap(const GapReport& g) override;
  void on_timeout() override;
  void on_decode_error(const PollDecodeError& e) override;

 private:
  std::vector<SessionSink*> sinks_;
};

struct SessionOptions {
  std::uint64_t max_polls = 0;  // 0 = until stopped
  /// Poll back to back and stamp records with start + n * poll_period
  /// instead of the wall clock.
  bool virtual_time = false;
  HostTime virtual_start{};
};

class Session {
 public:
  Session(ByteStream& stream, AcquisitionConfig config, SessionSink& sink,
          SessionOptions options = {});

  /// Blocks until stopped, max_polls is reached or the transport is lost.
  SessionSummary run();

  /// Thread-safe; takes effect between polls.
  void stop();
  void set_enabled_channels(ChannelMask mask);

  SessionSummary summary() const;
  const AcquisitionConfig& config() const noexcept { return config_; }

 private:
  HostTime now() const;

  ByteStream& stream_;
  AcquisitionConfig config_;
  SessionSink& sink_;
  SessionOptions options_;

  mutable std::mutex mutex_;
  std::condition_variable wake_;
  bool stop_requested_ = false;
  ChannelMask pending_mask_;
  SessionSummary summary_;
};

SessionSummary run_session(ByteStream& stream, const AcquisitionConfig& config,
                           SessionSink& sink, SessionOptions options = {});

}  // namespace das
