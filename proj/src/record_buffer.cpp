// SPDX-License-Identifier: Apache-2.0
#include "das/record_buffer.hpp"

#include <stdexcept>

namespace das {

struct Subscription::State {
  explicit State(std::size_t cap) : capacity(cap) {}

  std::mutex mutex;
  std::condition_variable ready;
  std::size_t capacity;
  std::vector<SampleRecord> slots;  // grows to capacity, then wraps
  std::uint64_t head = 0;  // total records ever published
  bool closed = false;

  std::uint64_t oldest() const { return head > capacity ? head - capacity : 0; }
};

std::optional<SampleRecord> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(state_->mutex);
  state_->ready.wait_for(lock, timeout,
                         [&] { return cursor_ < state_->head || state_->closed; });
  if (cursor_ >= state_->head) return std::nullopt;
  if (const auto oldest = state_->oldest(); cursor_ < oldest) {
    lost_ += oldest - cursor_;
    cursor_ = oldest;
  }
  return state_->slots[cursor_++ % state_->capacity];
}

bool Subscription::closed() const {
  std::lock_guard lock(state_->mutex);
  return state_->closed && cursor_ >= state_->head;
}

RecordBuffer::RecordBuffer(std::size_t capacity) {
  if (capacity == 0) throw std::invalid_argument("record buffer capacity must be > 0");
  state_ = std::make_shared<Subscription::State>(capacity);
}

void RecordBuffer::publish(SampleRecord record) {
  {
    std::lock_guard lock(state_->mutex);
    if (state_->slots.size() < state_->capacity) {
      state_->slots.push_back(std::move(record));
    } else {
      state_->slots[state_->head % state_->capacity] = std::move(record);
    }
    ++state_->head;
  }
  state_->ready.notify_all();
}

Subscription RecordBuffer::subscribe() {
  std::lock_guard lock(state_->mutex);
  return Subscription(state_, state_->head);
}

void RecordBuffer::close() {
  {
    std::lock_guard lock(state_->mutex);
    state_->closed = true;
  }
  state_->ready.notify_all();
}

std::size_t RecordBuffer::capacity() const noexcept { return state_->capacity; }

std::uint64_t RecordBuffer::published() const {
  std::lock_guard lock(state_->mutex);
  return state_->head;
}

}  // namespace das
