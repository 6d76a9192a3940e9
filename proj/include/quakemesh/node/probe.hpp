// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "quakemesh/node/actor.hpp"

namespace quakemesh::node {

/// Produces the probe's acceleration reading at a given instant. Calls arrive
/// with strictly increasing timestamps.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual AccelSample sample(TimeMs t) = 0;
};

/// Sensor at rest: exactly (0, 0, 1) g.
class RestSource final : public SampleSource {
 public:
  AccelSample sample(TimeMs t) override { return {t, 0.0, 0.0, 1.0}; }
};

struct ProbeConfig {
  NodeId id;
  GeoLocation location;
  std::vector<NodeId> authorities;
  std::optional<NodeId> fixed_detector{};  // co-located probe wired to one detector
  std::optional<NodeId> known_detector{};  // fallback when the authority is unreachable
  std::size_t batch_size = 20;
  double sample_rate_hz = 100.0;
  TimeMs query_timeout_ms = 5000;
  TimeMs reconnect_delay_ms = 5000;
  TimeMs backoff_base_ms = 1000;
  TimeMs backoff_cap_ms = 60000;
};

struct ProbeStats {
  std::size_t queries = 0;
  std::size_t query_failures = 0;
  std::size_t unavailable = 0;  // NoDetectorAvailable answers
  std::size_t assignments = 0;
  std::size_t connection_losses = 0;
  std::size_t batches_sent = 0;
  std::size_t samples_sent = 0;
};

/// Probe role: finds its detector and streams SampleBatch envelopes to it.
/// Never talks to other probes or to detectors other than its assigned one.
class Probe : public Actor {
 public:
  Probe(ProbeConfig cfg, std::unique_ptr<SampleSource> source);

  const NodeId& id() const noexcept override { return cfg_.id; }
  Role role() const noexcept override { return Role::probe; }
  void start(NodeContext& ctx) override;
  void on_message(NodeContext& ctx, const NodeId& from, const protocol::Envelope& env) override;
  void on_timer(NodeContext& ctx, std::uint64_t timer_id) override;

  const std::optional<NodeId>& assigned() const noexcept { return assigned_; }
  const ProbeStats& stats() const noexcept { return stats_; }
  const ProbeConfig& config() const noexcept { return cfg_; }

 private:
  enum TimerKind : std::uint32_t { kBatch = 1, kQuery = 2, kQueryTimeout = 3, kConnect = 4 };

  void query(NodeContext& ctx);
  void connect(NodeContext& ctx, const NodeId& detector);
  void retry_query(NodeContext& ctx, TimeMs delay);
  void send_batch(NodeContext& ctx);
  bool send(NodeContext& ctx, const NodeId& to, protocol::Payload payload);
  TimeMs batch_period_ms() const;
  TimeMs sample_period_ms() const;

  ProbeConfig cfg_;
  std::unique_ptr<SampleSource> source_;
  ProbeStats stats_;
  Backoff backoff_;
  std::optional<NodeId> assigned_;
  std::set<NodeId> failed_;
  std::uint64_t seq_ = 0;
  std::uint32_t query_generation_ = 0;
  std::uint32_t stream_generation_ = 0;
  bool awaiting_assign_ = false;
  bool query_pending_ = false;
  TimeMs cursor_ms_ = 0;
};

}  // namespace quakemesh::node
