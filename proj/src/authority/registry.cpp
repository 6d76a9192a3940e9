// SPDX-License-Identifier: Apache-2.0
#include "quakemesh/authority/registry.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <tuple>

#include "quakemesh/protocol/codec.hpp"

namespace quakemesh::authority {

NeighborList k_nearest(const std::map<NodeId, DetectorRecord>& detectors, const GeoLocation& from,
                       const std::optional<NodeId>& self, std::size_t k, TimeMs now_ms,
                       std::span<const NodeId> exclude) {
  struct Candidate {
    double km;
    const DetectorRecord* rec;
  };
  std::vector<Candidate> cands;
  for (const auto& [id, rec] : detectors) {
    if (rec.expired_at(now_ms) || (self && id == *self)) continue;
    if (std::find(exclude.begin(), exclude.end(), id) != exclude.end()) continue;
    cands.push_back({haversine_distance(from, rec.location), &rec});
  }
  const std::size_t n = std::min(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(n), cands.end(),
                    [](const Candidate& a, const Candidate& b) {
                      return a.km < b.km || (a.km == b.km && a.rec->node_id < b.rec->node_id);
                    });
  NeighborList out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({cands[i].rec->node_id, cands[i].rec->endpoint, cands[i].rec->location});
  return out;
}

namespace {

auto lww_key(const DetectorRecord& r) {
  return std::make_tuple(r.registered_at_ms, r.ttl_ms, r.endpoint, r.location.latitude_deg(),
                         r.location.longitude_deg());
}

auto log_key(const EewLogEntry& e) { return std::tie(e.message.id, e.reporter); }

// Total order on entries sharing a key, so the survivor does not depend on
// which side of the merge it came from.
std::string content_key(const EewLogEntry& e) {
  return protocol::encode_body({e.reporter, 0, protocol::EewLog{e.message, e.received_at_ms}});
}

}  // namespace

RegistrySnapshot merge(const RegistrySnapshot& a, const RegistrySnapshot& b) {
  RegistrySnapshot out;
  out.detectors = a.detectors;
  for (const auto& [id, rec] : b.detectors) {
    auto it = out.detectors.find(id);
    if (it == out.detectors.end()) out.detectors.emplace(id, rec);
    else if (lww_key(it->second) < lww_key(rec)) it->second = rec;
  }

  std::vector<EewLogEntry> all = a.log;
  all.insert(all.end(), b.log.begin(), b.log.end());
  // Keep the earliest receipt per key so the choice is order-independent.
  std::sort(all.begin(), all.end(), [](const EewLogEntry& x, const EewLogEntry& y) {
    if (log_key(x) != log_key(y)) return log_key(x) < log_key(y);
    if (x.received_at_ms != y.received_at_ms) return x.received_at_ms < y.received_at_ms;
    return content_key(x) < content_key(y);
  });
  all.erase(std::unique(all.begin(), all.end(),
                        [](const EewLogEntry& x, const EewLogEntry& y) { return log_key(x) == log_key(y); }),
            all.end());
  std::stable_sort(all.begin(), all.end(), [](const EewLogEntry& x, const EewLogEntry& y) {
    return std::tie(x.received_at_ms, x.message.id, x.reporter) < std::tie(y.received_at_ms, y.message.id, y.reporter);
  });
  out.log = std::move(all);
  return out;
}

NeighborList Registry::register_detector(const DetectorRecord& rec, std::size_t k) {
  detectors_.insert_or_assign(rec.node_id, rec);
  return k_nearest(detectors_, rec.location, rec.node_id, k, rec.registered_at_ms);
}

Expected<protocol::NeighborEntry, AssignError> Registry::assign_probe(const GeoLocation& probe_location, TimeMs now_ms,
                                                                      std::span<const NodeId> exclude) const {
  auto nearest = k_nearest(detectors_, probe_location, std::nullopt, 1, now_ms, exclude);
  if (nearest.empty()) return unexpected(AssignError::NoDetectorAvailable);
  return nearest.front();
}

LogAck Registry::log_eew(EewLogEntry entry) {
  log_.push_back(std::move(entry));
  return {log_.size() - 1};
}

std::size_t Registry::expire_leases(TimeMs now_ms) {
  return std::erase_if(detectors_, [&](const auto& kv) { return kv.second.expired_at(now_ms); });
}

std::vector<EewLogEntry> Registry::log_between(TimeMs from_ms, TimeMs to_ms) const {
  std::vector<EewLogEntry> out;
  for (const auto& e : log_)
    if (e.received_at_ms >= from_ms && e.received_at_ms <= to_ms) out.push_back(e);
  return out;
}

void Registry::replicate(const RegistrySnapshot& peer) {
  auto merged = merge(snapshot(), peer);
  detectors_ = std::move(merged.detectors);
  log_ = std::move(merged.log);
}

void write_snapshot(std::ostream& out, const RegistrySnapshot& snap) {
  for (const auto& [id, rec] : snap.detectors) {
    protocol::Envelope e{id, 0, protocol::Register{rec.location, rec.endpoint, rec.ttl_ms, rec.registered_at_ms}};
    out << protocol::encode_body(e) << '\n';
  }
  for (const auto& entry : snap.log) {
    protocol::Envelope e{entry.reporter, 0, protocol::EewLog{entry.message, entry.received_at_ms}};
    out << protocol::encode_body(e) << '\n';
  }
}

Expected<RegistrySnapshot, std::string> read_snapshot(std::istream& in) {
  RegistrySnapshot snap;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto env = protocol::decode_body(line);
    if (!env) return unexpected("line " + std::to_string(lineno) + ": " + std::string(protocol::to_string(env.error())));
    if (const auto* reg = std::get_if<protocol::Register>(&env->payload)) {
      snap.detectors.insert_or_assign(env->sender,
                                      DetectorRecord{env->sender, reg->location, reg->endpoint, reg->at_ms, reg->ttl_ms});
    } else if (const auto* log = std::get_if<protocol::EewLog>(&env->payload)) {
      snap.log.push_back({log->at_ms, log->message, env->sender});
    } else {
      return unexpected("line " + std::to_string(lineno) + ": unexpected kind " +
                        std::string(protocol::to_string(env->kind())));
    }
  }
  return snap;
}

}  // namespace quakemesh::authority
