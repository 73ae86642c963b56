// SPDX-License-Identifier: Apache-2.0
// Single-writer ring buffer of sample records with independent readers.
//
// Every subscriber sees records at most once and in publish order. A reader
// that falls more than `capacity` records behind loses the oldest ones; the
// loss is counted on its subscription rather than stalling the writer.
#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "das/acquisition.hpp"

namespace das {

class RecordBuffer;

class Subscription {
 public:
  /// Next record, or nullopt on timeout or once the buffer is closed and
  /// this reader has caught up.
  std::optional<SampleRecord> next(std::chrono::milliseconds timeout);

  /// Records skipped because this reader fell behind by more than the capacity.
  std::uint64_t lost() const noexcept { return lost_; }
  bool closed() const;

 private:
  friend class RecordBuffer;
  struct State;
  Subscription(std::shared_ptr<State> state, std::uint64_t cursor)
      : state_(std::move(state)), cursor_(cursor) {}

  std::shared_ptr<State> state_;
  std::uint64_t cursor_;
  std::uint64_t lost_ = 0;
};

class RecordBuffer {
 public:
  explicit RecordBuffer(std::size_t capacity);

  void publish(SampleRecord record);

  /// Starts at the next record to be published.
  Subscription subscribe();

  /// Wakes all readers; they drain what remains and then see end of stream.
  void close();

  std::size_t capacity() const noexcept;
  std::uint64_t published() const;

 private:
  std::shared_ptr<Subscription::State> state_;
};

inline Subscription subscribe(RecordBuffer& buffer) { return buffer.subscribe(); }

/// Session sink that publishes every record into a buffer.
class BufferSink : public SessionSink {
 public:
  explicit BufferSink(RecordBuffer& buffer) : buffer_(buffer) {}
  void on_record(const SampleRecord& record) override { buffer_.publish(record); }

 private:
  RecordBuffer& buffer_;
};

}  // namespace das
