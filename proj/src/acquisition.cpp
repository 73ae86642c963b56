// SPDX-License-Identifier: Apache-2.0
#include "das/acquisition.hpp"

#include <algorithm>

namespace das {
namespace {

std::string join_messages(const std::vector<FieldError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "; ";
    out += e.field + ": " + e.message;
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<FieldError> errors)
    : std::invalid_argument(join_messages(errors)), errors_(std::move(errors)) {}

std::vector<FieldError> AcquisitionConfig::check() const {
  std::vector<FieldError> errors;
  if (poll_period_ms <= 0) errors.push_back({"poll_period_ms", "must be > 0"});
  if (response_timeout_ms <= 0) {
    errors.push_back({"response_timeout_ms", "must be > 0"});
  } else if (poll_period_ms > 0 && response_timeout_ms >= poll_period_ms) {
    errors.push_back({"response_timeout_ms", "must be less than poll_period_ms"});
  }
  if (enabled_channels.none()) {
    errors.push_back({"enabled_channels", "at least one channel must be enabled"});
  }
  if (buffer_capacity == 0) errors.push_back({"buffer_capacity", "must be > 0"});
  return errors;
}

void AcquisitionConfig::validate() const {
  auto errors = check();
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

SampleRecord make_record(const RawFrame& frame, HostTime host_time,
                         const AcquisitionConfig& config) {
  SampleRecord record;
  record.seq = frame.seq;
  record.host_time = host_time;
  record.counts = frame.counts;
  record.enabled = config.enabled_channels;
  for (std::size_t ch = 0; ch < frame.counts.size(); ++ch) {
    record.volts[ch] = counts_to_volts(frame.counts[ch]);
    if (const auto& map = config.channel_maps[ch]) {
      const auto mapped = convert_counts(*map, frame.counts[ch]);
      record.values[ch] = ChannelValue{mapped.value, map->unit(), mapped.flag};
    }
  }
  return record;
}

std::optional<GapReport> GapDetector::observe(std::uint8_t seq, HostTime when) {
  std::optional<GapReport> report;
  if (last_) {
    const auto expected = static_cast<std::uint8_t>(*last_ + 1);
    if (seq != expected) {
      report = GapReport{expected, seq, static_cast<std::uint8_t>(seq - expected), when};
    }
  }
  last_ = seq;
  return report;
}

Poller::Poller(ByteStream& stream, Clock clock) : stream_(stream), clock_(std::move(clock)) {
  if (!clock_) {
    clock_ = [] { return std::chrono::floor<std::chrono::milliseconds>(std::chrono::system_clock::now()); };
  }
}

std::optional<std::string> Poller::take_candidate() {
  const auto lf = rx_.find('\n');
  std::size_t take = 0;
  if (lf != std::string::npos && lf < kFrameSize) {
    take = lf + 1;
  } else if (rx_.size() >= kFrameSize) {
    take = lf == kFrameSize ? kFrameSize + 1 : kFrameSize;
  } else {
    return std::nullopt;
  }
  std::string candidate = rx_.substr(0, take);
  rx_.erase(0, take);
  return candidate;
}

PollResult Poller::poll_once(const AcquisitionConfig& config) {
  using namespace std::chrono;

  // Anything still pending belongs to an exchange that already timed out.
  rx_.clear();
  std::string stale;
  while (stream_.read(stale, milliseconds(0)) == ReadStatus::kData) stale.clear();

  stream_.write(encode_poll());

  const auto deadline = steady_clock::now() + milliseconds(config.response_timeout_ms);
  for (;;) {
    if (auto candidate = take_candidate()) {
      auto decoded = decode_frame(*candidate);
      if (auto* error = std::get_if<DecodeError>(&decoded)) {
        return PollDecodeError{*error, std::move(*candidate)};
      }
      return make_record(std::get<RawFrame>(decoded), clock_(), config);
    }
    const auto remaining = std::chrono::ceil<milliseconds>(deadline - steady_clock::now());
    const auto status = stream_.read(rx_, std::max(remaining, milliseconds(0)));
    if (status == ReadStatus::kClosed) throw TransportError("device closed the connection");
    if (status == ReadStatus::kTimeout) {
      rx_.clear();
      return PollTimeout{};
    }
  }
}

void TeeSink::on_record(const SampleRecord& r) {
  for (auto* s : sinks_) s->on_record(r);
}
void TeeSink::on_gap(const GapReport& g) {
  for (auto* s : sinks_) s->on_gap(g);
}
void TeeSink::on_timeout() {
  for (auto* s : sinks_) s->on_timeout();
}
void TeeSink::on_decode_error(const PollDecodeError& e) {
  for (auto* s : sinks_) s->on_decode_error(e);
}

Session::Session(ByteStream& stream, AcquisitionConfig config, SessionSink& sink,
                 SessionOptions options)
    : stream_(stream), config_(std::move(config)), sink_(sink), options_(options) {
  config_.validate();
  pending_mask_ = config_.enabled_channels;
}

void Session::stop() {
  {
    std::lock_guard lock(mutex_);
    stop_requested_ = true;
  }
  wake_.notify_all();
}

void Session::set_enabled_channels(ChannelMask mask) {
  if (mask.none()) throw ConfigError("enabled_channels", "at least one channel must be enabled");
  std::lock_guard lock(mutex_);
  pending_mask_ = mask;
}

SessionSummary Session::summary() const {
  std::lock_guard lock(mutex_);
  return summary_;
}

HostTime Session::now() const {
  if (options_.virtual_time) {
    std::uint64_t polls;
    {
      std::lock_guard lock(mutex_);
      polls = summary_.polls;
    }
    return options_.virtual_start +
           std::chrono::milliseconds(static_cast<std::int64_t>(polls) * config_.poll_period_ms);
  }
  return std::chrono::floor<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

SessionSummary Session::run() {
  using namespace std::chrono;
  Poller poller(stream_, [this] { return now(); });
  GapDetector gaps;
  const auto period = milliseconds(config_.poll_period_ms);
  auto next_due = steady_clock::now();

  for (;;) {
    {
      std::unique_lock lock(mutex_);
      if (!options_.virtual_time) {
        wake_.wait_until(lock, next_due, [this] { return stop_requested_; });
      }
      if (stop_requested_) {
        summary_.end_cause = "stopped";
        break;
      }
      if (options_.max_polls != 0 && summary_.polls >= options_.max_polls) {
        summary_.end_cause = "completed";
        break;
      }
      config_.enabled_channels = pending_mask_;
    }
    next_due = std::max(next_due + period, steady_clock::now());

    PollResult result;
    try {
      result = poller.poll_once(config_);
    } catch (const TransportError& e) {
      std::lock_guard lock(mutex_);
      summary_.transport_lost = true;
      summary_.end_cause = std::string("transport lost: ") + e.what();
      break;
    }

    if (auto* record = std::get_if<SampleRecord>(&result)) {
      const auto gap = gaps.observe(record->seq, record->host_time);
      {
        std::lock_guard lock(mutex_);
        ++summary_.polls;
        ++summary_.records;
        if (gap) {
          ++summary_.gaps;
          summary_.missed += static_cast<std::uint64_t>(gap->missed_count);
        }
      }
      if (gap) sink_.on_gap(*gap);
      sink_.on_record(*record);
    } else if (auto* error = std::get_if<PollDecodeError>(&result)) {
      {
        std::lock_guard lock(mutex_);
        ++summary_.polls;
        ++summary_.decode_errors;
      }
      sink_.on_decode_error(*error);
    } else {
      {
        std::lock_guard lock(mutex_);
        ++summary_.polls;
        ++summary_.timeouts;
      }
      sink_.on_timeout();
    }
  }
  return summary();
}

SessionSummary run_session(ByteStream& stream, const AcquisitionConfig& config,
                           SessionSink& sink, SessionOptions options) {
  Session session(stream, config, sink, options);
  return session.run();
}

}  // namespace das
