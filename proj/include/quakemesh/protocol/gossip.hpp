// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <unordered_set>

#include "quakemesh/protocol/messages.hpp"

namespace quakemesh::protocol {

struct GossipConfig {
  double max_distance_km = 100.0;
  std::uint32_t max_hops = 16;
  std::size_t dedup_capacity = 4096;

  std::string validate() const;
};

/// Bounded set of remembered message ids with FIFO eviction.
class DedupSet {
 public:
  explicit DedupSet(std::size_t capacity);

  bool contains(const MessageId& id) const { return members_.contains(id); }
  /// True when the id was not present before.
  bool insert(const MessageId& id);

  std::size_t size() const noexcept { return members_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<MessageId> order_;
  std::unordered_set<MessageId> members_;
};

void record_seen(DedupSet& seen, const MessageId& id);

/// Relay decision at the node holding `self_location`. Always records the id.
bool should_forward(const EEWMessage& msg, const GeoLocation& self_location, DedupSet& seen,
                    const GossipConfig& cfg);

}  // namespace quakemesh::protocol
