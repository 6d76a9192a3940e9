// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "quakemesh/core.hpp"

namespace quakemesh::detection {

struct PushStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;  // out-of-order or non-finite
};

/// Fixed-capacity circular store of one probe's samples. Oldest samples are
/// evicted first; samples older than the newest buffered one are dropped.
class RingBuffer {
 public:
  RingBuffer(NodeId probe_id, std::size_t capacity);

  PushStats push(std::span<const AccelSample> batch);
  PushStats push(const AccelSample& s) { return push(std::span<const AccelSample>(&s, 1)); }

  const NodeId& probe_id() const noexcept { return probe_id_; }
  std::size_t capacity() const noexcept { return storage_.size(); }
  std::size_t size() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  /// i = 0 is the oldest buffered sample.
  const AccelSample& at(std::size_t i) const;
  std::optional<TimeMs> newest_timestamp() const;
  std::vector<AccelSample> snapshot() const;

  std::size_t total_rejected() const noexcept { return total_rejected_; }

 private:
  NodeId probe_id_;
  std::vector<AccelSample> storage_;
  std::size_t head_ = 0;  // index of the oldest sample
  std::size_t count_ = 0;
  std::size_t total_rejected_ = 0;
};

}  // namespace quakemesh::detection
