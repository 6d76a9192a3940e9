// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quakemesh/core.hpp"
#include "quakemesh/expected.hpp"
#include "quakemesh/protocol/messages.hpp"

namespace quakemesh::authority {

struct DetectorRecord {
  NodeId node_id;
  GeoLocation location;
  std::string endpoint;
  TimeMs registered_at_ms = 0;
  TimeMs ttl_ms = 90000;

  bool expired_at(TimeMs now_ms) const noexcept { return now_ms > registered_at_ms + ttl_ms; }
  bool operator==(const DetectorRecord&) const = default;
};

/// Nearest first; ties broken by node id.
using NeighborList = std::vector<protocol::NeighborEntry>;

struct EewLogEntry {
  TimeMs received_at_ms = 0;
  protocol::EEWMessage message;
  NodeId reporter;

  bool operator==(const EewLogEntry&) const = default;
};

struct RegistrySnapshot {
  std::map<NodeId, DetectorRecord> detectors;
  std::vector<EewLogEntry> log;

  bool operator==(const RegistrySnapshot&) const = default;
};

enum class AssignError { NoDetectorAvailable };

struct LogAck {
  std::size_t position;  // index of the entry in the append-only log
};

/// k nearest live records to `from`, excluding `self` and anything in `exclude`.
NeighborList k_nearest(const std::map<NodeId, DetectorRecord>& detectors, const GeoLocation& from,
                       const std::optional<NodeId>& self, std::size_t k, TimeMs now_ms,
                       std::span<const NodeId> exclude = {});

/// Last-writer-wins on registered_at_ms per node id; logs are unioned on
/// (message id, reporter). Commutative, associative and idempotent; the log of
/// the result is ordered by (received_at_ms, message id, reporter).
RegistrySnapshot merge(const RegistrySnapshot& a, const RegistrySnapshot& b);

/// Registration/discovery state of one authority replica.
class Registry {
 public:
  NeighborList register_detector(const DetectorRecord& rec, std::size_t k);

  /// Probes are never stored.
  Expected<protocol::NeighborEntry, AssignError> assign_probe(const GeoLocation& probe_location, TimeMs now_ms,
                                                              std::span<const NodeId> exclude = {}) const;

  LogAck log_eew(EewLogEntry entry);
  std::size_t expire_leases(TimeMs now_ms);

  /// Entries with received_at_ms in [from_ms, to_ms], in received order.
  std::vector<EewLogEntry> log_between(TimeMs from_ms, TimeMs to_ms) const;

  RegistrySnapshot snapshot() const { return {detectors_, log_}; }
  void replicate(const RegistrySnapshot& peer);

  const std::map<NodeId, DetectorRecord>& detectors() const noexcept { return detectors_; }
  const std::vector<EewLogEntry>& log() const noexcept { return log_; }

 private:
  std::map<NodeId, DetectorRecord> detectors_;
  std::vector<EewLogEntry> log_;
};

/// One envelope body per line: Register bodies for detector records, EewLog
/// bodies for log entries. `at_ms` carries registered_at / received_at.
void write_snapshot(std::ostream& out, const RegistrySnapshot& snap);
Expected<RegistrySnapshot, std::string> read_snapshot(std::istream& in);

}  // namespace quakemesh::authority
