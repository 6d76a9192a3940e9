// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/protocol/gossip.hpp"

#include <cmath>
#include <stdexcept>

namespace quakemesh::protocol {

std::string GossipConfig::validate() const {
  if (!(max_distance_km > 0.0) || !std::isfinite(max_distance_km)) return "max_distance_km must be > 0";
  if (max_hops == 0) return "max_hops must be > 0";
  if (dedup_capacity == 0) return "dedup_capacity must be > 0";
  return {};
}

DedupSet::DedupSet(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("dedup capacity must be > 0");
}

bool DedupSet::insert(const MessageId& id) {
  if (!members_.insert(id).second) return false;
  order_.push_back(id);
  while (order_.size() > capacity_) {
    members_.erase(order_.front());
    order_.pop_front();
  }
  return true;
}

void record_seen(DedupSet& seen, const MessageId& id) { seen.insert(id); }

bool should_forward(const EEWMessage& msg, const GeoLocation& self_location, DedupSet& seen,
                    const GossipConfig& cfg) {
  const bool fresh = seen.insert(msg.id);
  return fresh && haversine_distance(self_location, msg.origin_location) <= cfg.max_distance_km &&
         msg.hop_count < cfg.max_hops;
}

}  // namespace quakemesh::protocol
