// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/detection/ring_buffer.hpp"

#include <stdexcept>

namespace quakemesh::detection {

RingBuffer::RingBuffer(NodeId probe_id, std::size_t capacity)
    : probe_id_(std::move(probe_id)), storage_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ring buffer capacity must be > 0");
}

PushStats RingBuffer::push(std::span<const AccelSample> batch) {
  PushStats stats;
  for (const auto& s : batch) {
    if (!s.finite() || (count_ > 0 && s.timestamp_ms < at(count_ - 1).timestamp_ms)) {
      ++stats.rejected;
      continue;
    }
    const std::size_t cap = storage_.size();
    if (count_ < cap) {
      storage_[(head_ + count_) % cap] = s;
      ++count_;
    } else {
      storage_[head_] = s;
      head_ = (head_ + 1) % cap;
    }
    ++stats.accepted;
  }
  total_rejected_ += stats.rejected;
  return stats;
}

const AccelSample& RingBuffer::at(std::size_t i) const {
  if (i >= count_) throw std::out_of_range("ring buffer index");
  return storage_[(head_ + i) % storage_.size()];
}

std::optional<TimeMs> RingBuffer::newest_timestamp() const {
  if (count_ == 0) return std::nullopt;
  return at(count_ - 1).timestamp_ms;
}

std::vector<AccelSample> RingBuffer::snapshot() const {
  std::vector<AccelSample> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < count_; ++i) out.push_back(at(i));
  return out;
}

}  // namespace quakemesh::detection
