// SPDX-License-Identifier: Apache-2.0
#include "das/device_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace das::sim {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool hits(std::uint64_t index, int every, int offset) {
  return every > 0 && index % static_cast<std::uint64_t>(every) == static_cast<std::uint64_t>(offset);
}

}  // namespace

double evaluate(const Signal& signal, double t_s) {
  return std::visit(
      Overloaded{
          [](const ConstantSignal& s) { return s.level; },
          [t_s](const SineSignal& s) {
            return s.offset + s.amplitude * std::sin(2.0 * std::numbers::pi * t_s / s.period_s);
          },
          [t_s](const RampSignal& s) {
            if (t_s <= 0.0) return s.start;
            if (t_s >= s.duration_s) return s.end;
            return s.start + (s.end - s.start) * (t_s / s.duration_s);
          },
          [t_s](const ReplaySignal& s) {
            const auto& pts = s.points;
            if (t_s <= pts.front().first) return pts.front().second;
            if (t_s >= pts.back().first) return pts.back().second;
            auto hi = std::upper_bound(pts.begin(), pts.end(), t_s,
                                       [](double t, const auto& p) { return t < p.first; });
            auto lo = std::prev(hi);
            const double frac = (t_s - lo->first) / (hi->first - lo->first);
            return lo->second + frac * (hi->second - lo->second);
          },
      },
      signal);
}

void validate(const ChannelSource& source) {
  if (!(source.noise_sigma >= 0.0) || !std::isfinite(source.noise_sigma)) {
    throw std::invalid_argument("noise_sigma must be >= 0");
  }
  std::visit(Overloaded{
                 [](const ConstantSignal&) {},
                 [](const SineSignal& s) {
                   if (!(s.period_s > 0.0)) throw std::invalid_argument("sine period_s must be > 0");
                 },
                 [](const RampSignal& s) {
                   if (!(s.duration_s > 0.0)) {
                     throw std::invalid_argument("ramp duration_s must be > 0");
                   }
                 },
                 [](const ReplaySignal& s) {
                   if (s.points.empty()) throw std::invalid_argument("replay series is empty");
                   for (std::size_t i = 1; i < s.points.size(); ++i) {
                     if (!(s.points[i - 1].first < s.points[i].first)) {
                       throw std::invalid_argument("replay series must be strictly time-sorted");
                     }
                   }
                 },
             },
             source.signal);
}

void SimConfig::assign(int channel, ChannelSource source) {
  if (channel < 0 || channel >= kChannelCount) {
    throw std::invalid_argument("channel id " + std::to_string(channel) + " outside 0..7");
  }
  auto& slot = sources[static_cast<std::size_t>(channel)];
  if (slot) throw std::invalid_argument("channel " + std::to_string(channel) + " assigned twice");
  sim::validate(source);
  slot = std::move(source);
}

void SimConfig::validate() const {
  for (const auto& source : sources) {
    if (source) sim::validate(*source);
  }
  if (!(poll_period_s >= 0.0) || !std::isfinite(poll_period_s)) {
    throw std::invalid_argument("poll_period_s must be >= 0");
  }
  if (faults.drop_every < 0 || faults.corrupt_every < 0 || faults.drop_offset < 0 ||
      faults.corrupt_offset < 0 ||
      (faults.drop_every > 0 && faults.drop_offset >= faults.drop_every) ||
      (faults.corrupt_every > 0 && faults.corrupt_offset >= faults.corrupt_every)) {
    throw std::invalid_argument("fault offsets must lie in [0, every)");
  }
}

VirtualClock advance_clock(VirtualClock clock, double dt_s) {
  if (!(dt_s >= 0.0) || !std::isfinite(dt_s)) {
    throw std::invalid_argument("clock advance must be finite and >= 0");
  }
  return VirtualClock(clock.now_s() + dt_s);
}

Counts sample_channel(const ChannelSource& source, double t_s, std::mt19937_64& rng) {
  double value = evaluate(source.signal, t_s);
  if (source.noise_sigma > 0.0) {
    value += std::normal_distribution<double>(0.0, source.noise_sigma)(rng);
  }
  return volts_to_counts(zener_clamp(source.map.extrapolate_volts(value)));
}

Device::Device(SimConfig config)
    : config_(std::move(config)), rng_(config_.rng_seed), started_(std::chrono::steady_clock::now()) {
  config_.validate();
}

double Device::now_s() const {
  if (config_.clock == ClockMode::kVirtual) return clock_.now_s();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
}

std::string Device::feed(std::string_view input) {
  static constexpr std::string_view kPoll = "P\r\n";
  std::string out;
  for (char c : input) {
    if (c == kPoll[static_cast<std::size_t>(poll_match_)]) {
      ++poll_match_;
    } else {
      poll_match_ = c == kPoll[0] ? 1 : 0;
    }
    if (poll_match_ == static_cast<int>(kPoll.size())) {
      poll_match_ = 0;
      out += respond_to_poll();
    }
  }
  return out;
}

std::string Device::respond_to_poll() {
  const std::uint64_t index = polls_++;
  const double t = now_s();

  RawFrame frame;
  frame.seq = seq_++;
  TruthSample truth;
  truth.frame_index = index;
  truth.seq = frame.seq;
  truth.t_s = t;
  for (std::size_t ch = 0; ch < frame.counts.size(); ++ch) {
    const auto& source = config_.sources[ch];
    if (!source) continue;  // unassigned channels read 0 counts
    truth.values[ch] = evaluate(source->signal, t);
    frame.counts[ch] = sample_channel(*source, t, rng_);
  }
  ++generated_;
  if (config_.clock == ClockMode::kVirtual) {
    clock_ = advance_clock(clock_, config_.poll_period_s);
  }

  const auto& faults = config_.faults;
  truth.emitted = !hits(index, faults.drop_every, faults.drop_offset);
  if (record_truth_) truth_.push_back(truth);
  if (!truth.emitted) return {};

  ++emitted_;
  std::string bytes = encode_frame(frame);
  if (hits(index, faults.corrupt_every, faults.corrupt_offset)) {
    char& digit = bytes[kCountsOffset + kCountDigits - 1];
    digit = digit == '0' ? '1' : '0';
  }
  return bytes;
}

void run_device(Device& device, ByteStream& stream, std::stop_token stop) {
  using namespace std::chrono_literals;
  std::string input;
  while (!stop.stop_requested()) {
    input.clear();
    const auto status = stream.read(input, 100ms);
    if (status == ReadStatus::kClosed) return;
    if (status == ReadStatus::kTimeout) continue;
    const std::string response = device.feed(input);
    if (!response.empty()) stream.write(response);
  }
}

void run_device(const SimConfig& config, ByteStream& stream, std::stop_token stop) {
  Device device(config);
  run_device(device, stream, std::move(stop));
}

void LoopbackLink::write(std::string_view bytes) {
  if (closed_) throw TransportError("loopback link closed");
  pending_ += device_.feed(bytes);
}

ReadStatus LoopbackLink::read(std::string& out, std::chrono::milliseconds) {
  if (!pending_.empty()) {
    out += pending_;
    pending_.clear();
    return ReadStatus::kData;
  }
  return closed_ ? ReadStatus::kClosed : ReadStatus::kTimeout;
}

void write_truth_csv(std::ostream& out, const Device& device) {
  const auto& sources = device.config().sources;
  out << "t_s,seq";
  for (std::size_t ch = 0; ch < sources.size(); ++ch) {
    if (sources[ch]) out << ",ch" << ch;
  }
  out << '\n';
  char buf[64];
  for (const auto& sample : device.truth()) {
    std::snprintf(buf, sizeof buf, "%.3f,%u", sample.t_s, static_cast<unsigned>(sample.seq));
    out << buf;
    for (std::size_t ch = 0; ch < sources.size(); ++ch) {
      if (!sources[ch]) continue;
      std::snprintf(buf, sizeof buf, ",%.9g", *sample.values[ch]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace das::sim
