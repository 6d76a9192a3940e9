// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quakemesh/core.hpp"
#include "quakemesh/expected.hpp"
#include "quakemesh/node/actor.hpp"
#include "quakemesh/protocol/messages.hpp"

namespace quakemesh::sim {

struct AlertRecord {
  NodeId node;
  std::string message_id;
  NodeId origin;
  std::string kind;  // local_detection | remote_gossip
  TimeMs time_ms = 0;
  std::uint32_t hop_count = 0;
  bool operator==(const AlertRecord&) const = default;
};

/// Peer graph captured when an EEW is originated.
struct OriginRecord {
  std::string message_id;
  NodeId origin;
  GeoLocation origin_location;
  TimeMs time_ms = 0;
  /// Directed edges a -> b (b is in a's peer set) with link latency.
  std::map<NodeId, std::map<NodeId, TimeMs>> topology;
  std::vector<NodeId> live_detectors;
  bool operator==(const OriginRecord&) const = default;
};

struct Transmission {
  enum class Outcome { delivered, lost, failed, dropped_in_flight, in_flight };
  TimeMs time_ms = 0;
  NodeId from;
  NodeId to;
  node::Role from_role = node::Role::detector;
  node::Role to_role = node::Role::detector;
  protocol::Kind kind = protocol::Kind::Ping;
  std::size_t bytes = 0;
  std::string message_id{};                    // Eew / EewLog only
  std::optional<std::uint32_t> hops{};         // Eew / EewLog only
  std::optional<double> sender_distance_km{};  // Eew: sender to message origin
  Outcome outcome = Outcome::in_flight;
  std::optional<TimeMs> delivered_at_ms{};
};

std::string_view to_string(Transmission::Outcome o) noexcept;

struct AuditResult {
  std::size_t privacy_violations = 0;
  std::size_t duplicate_alerts = 0;
  std::size_t duplicate_relays = 0;
  std::size_t out_of_range_relays = 0;
  std::size_t hop_limit_violations = 0;
  std::size_t hop_increment_violations = 0;
  std::size_t latency_bound_violations = 0;
  std::size_t threshold_inconsistencies = 0;

  bool passed() const noexcept {
    return privacy_violations == 0 && duplicate_alerts == 0 && duplicate_relays == 0 && out_of_range_relays == 0 &&
           hop_limit_violations == 0 && hop_increment_violations == 0 && latency_bound_violations == 0 &&
           threshold_inconsistencies == 0;
  }
  bool operator==(const AuditResult&) const = default;
};

struct Metrics {
  std::size_t detectors_total = 0;
  std::size_t detectors_live = 0;
  std::size_t detectors_alerted = 0;  // live detectors with at least one alert
  double coverage = 0.0;
  std::size_t eew_messages = 0;
  std::size_t distinct_origins = 0;
  std::size_t local_alerts = 0;
  std::size_t remote_alerts = 0;
  double latency_median_ms = 0.0;
  double latency_p95_ms = 0.0;
  std::size_t duplicate_deliveries = 0;
  std::size_t transmissions = 0;
  std::size_t bytes = 0;
  std::size_t failed_sends = 0;
  std::size_t lost_messages = 0;
  std::size_t authority_log_entries = 0;
  std::size_t authority_report_failures = 0;
  std::size_t detection_results = 0;
  std::map<std::string, std::size_t> transmissions_by_kind;
  bool operator==(const Metrics&) const = default;
};

struct SimReport {
  std::string scenario;
  std::uint64_t seed = 0;
  TimeMs duration_ms = 0;
  double max_distance_km = 0.0;
  std::uint32_t max_hops = 0;
  std::vector<AlertRecord> alerts;
  std::vector<OriginRecord> origins;
  std::vector<Transmission> transmissions;  // full trace; not serialized
  std::uint64_t trace_digest = 0;           // FNV-1a over the trace
  std::size_t threshold_inconsistencies = 0;
  Metrics metrics;
  AuditResult audit;
};

/// Re-derives every audit field from the report contents.
AuditResult audit(const SimReport& report);

/// Nearest-rank percentile of a sample (p in [0, 100]); 0 for empty input.
double percentile(std::vector<double> values, double p);

/// Canonical text form (deterministic bytes for a given report).
std::string to_text(const SimReport& report);
/// Parses what to_text produced. The transmission trace is not restored.
Expected<SimReport, std::string> from_text(std::string_view text);

/// One JSON object per transmission.
std::string trace_lines(const SimReport& report);

}  // namespace quakemesh::sim
