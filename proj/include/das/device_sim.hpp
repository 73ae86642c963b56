// SPDX-License-Identifier: Apache-2.0
// Simulated acquisition device: per-channel signal sources, the signal
// conditioning forward model, ADC sampling and the poll/response loop.
#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <stop_token>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "das/codec.hpp"
#include "das/conversion.hpp"
#include "das/transport.hpp"

namespace das::sim {

struct ConstantSignal {
  double level = 0.0;
};

struct SineSignal {
  double offset = 0.0;
  double amplitude = 0.0;
  double period_s = 1.0;
};

/// Linear from start to end over duration_s, then holds at end.
struct RampSignal {
  double start = 0.0;
  double end = 0.0;
  double duration_s = 1.0;
};

/// Piecewise-linear through (time_s, value) points, holding the end values
/// outside the recorded span.
struct ReplaySignal {
  std::vector<std::pair<double, double>> points;
};

using Signal = std::variant<ConstantSignal, SineSignal, RampSignal, ReplaySignal>;

/// Noise-free value of the signal at t seconds.
double evaluate(const Signal& signal, double t_s);

struct ChannelSource {
  Signal signal;
  double noise_sigma = 0.0;  // engineering units
  LinearMap map;
};

/// Throws std::invalid_argument when a source parameter violates its bounds.
void validate(const ChannelSource& source);

enum class ClockMode { kVirtual, kRealTime };

/// Response faults for exercising host-side loss handling. A response with
/// zero-based index i is dropped when drop_every > 0 and
/// i % drop_every == drop_offset; corruption works the same way and flips
/// one count digit without repairing the checksum.
struct FaultInjection {
  int drop_every = 0;
  int drop_offset = 0;
  int corrupt_every = 0;
  int corrupt_offset = 0;
};

struct SimConfig {
  std::array<std::optional<ChannelSource>, kChannelCount> sources{};
  std::uint64_t rng_seed = 0;
  ClockMode clock = ClockMode::kVirtual;
  double poll_period_s = 1.0;  // virtual clock advance per poll
  FaultInjection faults;

  /// Throws std::invalid_argument for a bad channel id or a second assignment.
  void assign(int channel, ChannelSource source);
  void validate() const;
};

class VirtualClock {
 public:
  VirtualClock() = default;
  explicit VirtualClock(double now_s) : now_s_(now_s) {}
  double now_s() const noexcept { return now_s_; }

 private:
  double now_s_ = 0.0;
};

/// Throws std::invalid_argument for negative or non-finite dt.
VirtualClock advance_clock(VirtualClock clock, double dt_s);

/// Ground truth, noise, units to volts, clamp, quantize.
Counts sample_channel(const ChannelSource& source, double t_s, std::mt19937_64& rng);

/// Pre-noise, pre-quantization values the device generated for one frame.
struct TruthSample {
  std::uint64_t frame_index = 0;
  std::uint8_t seq = 0;
  double t_s = 0.0;
  bool emitted = true;
  std::array<std::optional<double>, kChannelCount> values{};
};

class Device {
 public:
  explicit Device(SimConfig config);

  /// Feeds host bytes and returns the device's response bytes. Bytes that
  /// do not form a poll request are discarded without a response.
  std::string feed(std::string_view input);

  void set_record_truth(bool on) { record_truth_ = on; }
  const std::vector<TruthSample>& truth() const noexcept { return truth_; }

  const SimConfig& config() const noexcept { return config_; }
  std::uint64_t polls_received() const noexcept { return polls_; }
  std::uint64_t frames_generated() const noexcept { return generated_; }
  std::uint64_t frames_emitted() const noexcept { return emitted_; }
  std::uint8_t next_seq() const noexcept { return seq_; }
  double now_s() const;

 private:
  std::string respond_to_poll();

  SimConfig config_;
  std::mt19937_64 rng_;
  VirtualClock clock_;
  std::chrono::steady_clock::time_point started_;
  std::uint8_t seq_ = 0;
  int poll_match_ = 0;  // bytes of "P\r\n" matched so far
  std::uint64_t polls_ = 0;
  std::uint64_t generated_ = 0;
  std::uint64_t emitted_ = 0;
  bool record_truth_ = false;
  std::vector<TruthSample> truth_;
};

/// Serves polls from `stream` until the peer closes or `stop` is requested.
/// Transport failures propagate as TransportError.
void run_device(Device& device, ByteStream& stream, std::stop_token stop = {});

/// Convenience overload owning its Device.
void run_device(const SimConfig& config, ByteStream& stream, std::stop_token stop = {});

/// Host-side stream that drives a Device synchronously in the caller's
/// thread. Responses are produced during write(), so a read that finds no
/// data returns kTimeout immediately instead of waiting.
class LoopbackLink final : public ByteStream {
 public:
  explicit LoopbackLink(Device& device) : device_(device) {}

  void write(std::string_view bytes) override;
  ReadStatus read(std::string& out, std::chrono::milliseconds timeout) override;
  void close() override { closed_ = true; }

 private:
  Device& device_;
  std::string pending_;
  bool closed_ = false;
};

/// CSV export of the truth ledger: header "t_s,seq,chN..." for assigned
/// channels, one row per generated frame.
void write_truth_csv(std::ostream& out, const Device& device);

}  // namespace das::sim
