// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quakemesh/detection/pipeline.hpp"
#include "quakemesh/node/actor.hpp"
#include "quakemesh/protocol/gossip.hpp"

namespace quakemesh::node {

struct AlertEvent {
  enum class Kind { local_detection, remote_gossip };
  NodeId node;
  protocol::EEWMessage message;
  Kind kind;
  TimeMs raised_at_ms;
};

std::string_view to_string(AlertEvent::Kind k) noexcept;

using AlertSink = std::function<void(const AlertEvent&)>;
using ResultSink = std::function<void(const NodeId& detector, const detection::DetectionResult&, double threshold)>;

struct DetectorConfig {
  NodeId id;
  GeoLocation location;
  std::string endpoint;
  std::vector<NodeId> authorities;  // replicas, tried in order

  detection::DetectorParams params{};
  detection::QuorumPolicy quorum{};
  protocol::GossipConfig gossip{};

  TimeMs reregister_interval_ms = 30000;
  TimeMs lease_ttl_ms = 90000;
  TimeMs register_timeout_ms = 5000;
  TimeMs origination_suppress_ms = 30000;
  // Also hold back origination while an alert received from a peer is fresh.
  bool suppress_after_remote = true;
  TimeMs probe_timeout_ms = 5000;
  TimeMs backoff_base_ms = 1000;
  TimeMs backoff_cap_ms = 60000;
};

struct DetectorStats {
  std::size_t registrations = 0;
  std::size_t registration_failures = 0;
  std::size_t peer_send_failures = 0;
  std::size_t authority_report_failures = 0;
  std::size_t originated = 0;
  std::size_t suppressed = 0;
  std::size_t relayed = 0;  // individual relay sends
  std::size_t duplicates = 0;
  std::size_t samples_rejected = 0;
  std::size_t windows_evaluated = 0;
  std::size_t windows_skipped = 0;
  std::size_t probes_timed_out = 0;
};

/// Detector role: probe buffers and detection pipeline, EEW origination,
/// local alerting and distance-bounded gossip relay.
class Detector : public Actor {
 public:
  explicit Detector(DetectorConfig cfg, AlertSink alerts = {}, ResultSink results = {});

  const NodeId& id() const noexcept override { return cfg_.id; }
  Role role() const noexcept override { return Role::detector; }
  void start(NodeContext& ctx) override;
  void on_message(NodeContext& ctx, const NodeId& from, const protocol::Envelope& env) override;
  void on_timer(NodeContext& ctx, std::uint64_t timer_id) override;

  /// Originates an EEW for a local pipeline alert unless suppressed.
  std::optional<protocol::EEWMessage> on_local_detection(NodeContext& ctx, const detection::LocalAlert& alert);
  /// Alerts on first sight and relays when the gossip rule allows.
  void on_remote_eew(NodeContext& ctx, const NodeId& from, const protocol::EEWMessage& msg);

  const DetectorConfig& config() const noexcept { return cfg_; }
  const std::set<NodeId>& peers() const noexcept { return peers_; }
  const std::vector<AlertEvent>& alerts() const noexcept { return alerts_; }
  const DetectorStats& stats() const noexcept { return stats_; }
  const detection::DetectionPipeline& pipeline() const noexcept { return pipeline_; }
  bool registered() const noexcept { return registered_; }

 protected:
  bool send(NodeContext& ctx, const NodeId& to, protocol::Payload payload);
  /// Sends to every peer except `skip`; peers that cannot be reached are dropped.
  std::size_t broadcast(NodeContext& ctx, const protocol::Payload& payload, const std::optional<NodeId>& skip,
                        std::size_t* failures);

 private:
  enum TimerKind : std::uint32_t { kTick = 1, kRegister = 2, kRegisterTimeout = 3 };

  void attempt_register(NodeContext& ctx);
  void schedule_register_retry(NodeContext& ctx);
  void on_register_ack(NodeContext& ctx, const protocol::RegisterAck& ack);
  void on_tick(NodeContext& ctx);
  void raise(const protocol::EEWMessage& msg, AlertEvent::Kind kind, TimeMs now);
  bool report_to_authority(NodeContext& ctx, const protocol::EEWMessage& msg);

  DetectorConfig cfg_;
  AlertSink alert_sink_;
  ResultSink result_sink_;
  detection::DetectionPipeline pipeline_;
  protocol::DedupSet seen_;
  std::set<NodeId> peers_;
  std::map<NodeId, TimeMs> probe_last_seen_;
  std::vector<AlertEvent> alerts_;
  DetectorStats stats_;
  Backoff backoff_;

  std::uint64_t envelope_seq_ = 0;
  std::uint64_t eew_seq_ = 0;
  std::uint32_t register_generation_ = 0;
  bool awaiting_ack_ = false;
  bool registered_ = false;
  std::optional<TimeMs> last_origination_ms_;
  std::optional<TimeMs> last_alert_ms_;
};

}  // namespace quakemesh::node
